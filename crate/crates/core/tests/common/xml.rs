//! Synthetic XML documents and an independent element counter.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Counts element starts: `<` followed by a name character.
pub fn count_tags(s: &str) -> usize {
    let b = s.as_bytes();
    (0..b.len()).filter(|&i| b[i] == b'<' && b.get(i + 1).is_some_and(|c| c.is_ascii_alphabetic())).count()
}

/// Random single-root document with attributes, text, comments and
/// processing instructions between elements. No `<` appears outside markup.
pub fn synthetic_xml(elements: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::from("<?xml version=\"1.0\"?>\n<!-- synthetic -->\n");
    let mut stack: Vec<String> = Vec::new();
    let mut made = 0;
    while made < elements || !stack.is_empty() {
        let open = made < elements && (stack.is_empty() || rng.gen_bool(0.55));
        if open {
            let name = format!("e{}", rng.gen_range(0..20));
            let attr = if rng.gen_bool(0.3) { format!(" id=\"{made}\" k='a&amp;b'") } else { String::new() };
            made += 1;
            // the first element stays open so the document has a single root
            if made > 1 && rng.gen_bool(0.3) {
                out.push_str(&format!("<{name}{attr}/>"));
            } else {
                out.push_str(&format!("<{name}{attr}>"));
                stack.push(name);
            }
        } else {
            let name = stack.pop().unwrap();
            out.push_str(&format!("</{name}>"));
        }
        match rng.gen_range(0..12) {
            0 => out.push_str("text &lt; more"),
            1 => out.push_str("<!-- note -->"),
            2 => out.push_str("<?pi data?>"),
            3 => out.push('\n'),
            _ => {}
        }
    }
    out
}
