//! Reading and writing parenthesis sequences.
//!
//! Sources: XML element structure, `(`/`)` text, and a packed binary format
//! (8-byte little-endian length in parentheses, then one bit per parenthesis,
//! most significant bit first, 1 = open, zero-padded). Also a seeded
//! generator of uniformly random trees.

use std::io::{BufRead, BufReader, Read, Write};

use quick_xml::events::Event;
use quick_xml::Reader;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bp::{Paren, ParenSeq};
use crate::error::{Error, Result};

/// A balanced sequence and where it came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BpDocument {
    pub seq: ParenSeq,
    pub source: String,
}

impl BpDocument {
    /// Nodes of the encoded tree (or forest).
    pub fn node_count(&self) -> usize {
        self.seq.len() / 2
    }

    pub fn len(&self) -> usize {
        self.seq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seq.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BpFormat {
    Text,
    Packed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TextOptions {
    /// Accept several top-level trees. When false the sequence must be empty
    /// or a single tree.
    pub allow_forest: bool,
}

impl Default for TextOptions {
    fn default() -> Self {
        TextOptions { allow_forest: true }
    }
}

/// Checks total excess 0 and no negative prefix.
pub fn check_balanced(seq: &ParenSeq) -> Result<()> {
    let mut e: i64 = 0;
    for (i, p) in seq.iter().enumerate() {
        e += p.step() as i64;
        if e < 0 {
            return Err(Error::Unbalanced(format!("excess drops below zero at position {i}")));
        }
    }
    if e != 0 {
        return Err(Error::Unbalanced(format!("final excess is {e}")));
    }
    Ok(())
}

fn check_single_tree(seq: &ParenSeq) -> Result<()> {
    let mut e = 0i64;
    for (i, p) in seq.iter().enumerate() {
        e += p.step() as i64;
        if e == 0 && i + 1 < seq.len() {
            return Err(Error::Unbalanced(format!("more than one tree: first one ends at position {i}")));
        }
    }
    Ok(())
}

/// One open per element start and one close per element end, in document
/// order. Everything except element structure is ignored.
pub fn xml_to_bp<R: BufRead>(input: R, source: &str) -> Result<BpDocument> {
    let mut reader = Reader::from_reader(input);
    reader.config_mut().check_end_names = true;
    let mut buf = Vec::new();
    let mut seq = ParenSeq::new();
    let mut depth = 0usize;
    loop {
        let ev = reader
            .read_event_into(&mut buf)
            .map_err(|e| Error::MalformedXml(format!("{e} at byte {}", reader.error_position())))?;
        match ev {
            Event::Start(_) => {
                seq.push(Paren::Open);
                depth += 1;
            }
            Event::End(_) => {
                seq.push(Paren::Close);
                depth -= 1;
            }
            Event::Empty(_) => {
                seq.push(Paren::Open);
                seq.push(Paren::Close);
            }
            Event::Eof => break,
            _ => {}
        }
        buf.clear();
    }
    if depth != 0 {
        return Err(Error::MalformedXml(format!("{depth} element(s) left open at end of input")));
    }
    Ok(BpDocument { seq, source: source.to_string() })
}

/// Parses `(`/`)` text, skipping whitespace.
pub fn parse_bp_text<R: Read>(input: R, opts: TextOptions, source: &str) -> Result<BpDocument> {
    let mut seq = ParenSeq::new();
    let mut pos = 0usize;
    let mut reader = BufReader::new(input);
    loop {
        let chunk = reader.fill_buf()?;
        if chunk.is_empty() {
            break;
        }
        for &b in chunk {
            match b {
                b'(' => seq.push(Paren::Open),
                b')' => seq.push(Paren::Close),
                b' ' | b'\t' | b'\n' | b'\r' => {}
                _ => return Err(Error::BadChar { pos, ch: b as char }),
            }
            pos += 1;
        }
        let n = chunk.len();
        reader.consume(n);
    }
    check_balanced(&seq)?;
    if !opts.allow_forest {
        check_single_tree(&seq)?;
    }
    Ok(BpDocument { seq, source: source.to_string() })
}

pub fn parse_bp_packed<R: Read>(mut input: R, source: &str) -> Result<BpDocument> {
    let mut head = [0u8; 8];
    input
        .read_exact(&mut head)
        .map_err(|_| Error::BadPacked("missing 8-byte length header".into()))?;
    let len = u64::from_le_bytes(head);
    let len = usize::try_from(len).map_err(|_| Error::BadPacked(format!("length {len} too large")))?;
    let bytes = len.div_ceil(8);
    let mut payload = Vec::new();
    input.read_to_end(&mut payload)?;
    if payload.len() != bytes {
        return Err(Error::BadPacked(format!("expected {bytes} payload bytes, found {}", payload.len())));
    }
    let mut seq = ParenSeq::with_capacity(len);
    for i in 0..len {
        seq.push(Paren::from_bit(payload[i / 8] >> (7 - i % 8) & 1 == 1));
    }
    if len % 8 != 0 && payload[bytes - 1] & (0xff >> (len % 8)) != 0 {
        return Err(Error::BadPacked("nonzero padding bits".into()));
    }
    check_balanced(&seq)?;
    Ok(BpDocument { seq, source: source.to_string() })
}

pub fn serialize_bp<W: Write>(doc: &BpDocument, format: BpFormat, mut out: W) -> Result<()> {
    match format {
        BpFormat::Text => {
            let text: Vec<u8> = doc.seq.iter().map(|p| p.as_char() as u8).collect();
            out.write_all(&text)?;
        }
        BpFormat::Packed => {
            out.write_all(&(doc.seq.len() as u64).to_le_bytes())?;
            let mut bytes = vec![0u8; doc.seq.len().div_ceil(8)];
            for (i, p) in doc.seq.iter().enumerate() {
                if p.is_open() {
                    bytes[i / 8] |= 0x80 >> (i % 8);
                }
            }
            out.write_all(&bytes)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Uniformly random ordered tree with `n_nodes` nodes, deterministic per seed.
///
/// The children of the root form a uniform Dyck word of `n_nodes - 1` pairs,
/// drawn with the cycle lemma: shuffle `m` opens and `m + 1` closes, rotate
/// to start just after the first minimum prefix, drop the final close.
pub fn random_balanced(n_nodes: usize, seed: u64) -> BpDocument {
    let source = format!("random:{n_nodes}:{seed}");
    if n_nodes == 0 {
        return BpDocument { seq: ParenSeq::new(), source };
    }
    let m = n_nodes - 1;
    let mut steps: Vec<bool> = (0..2 * m + 1).map(|k| k < m).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    steps.shuffle(&mut rng);

    let (mut e, mut min, mut at) = (0i64, 0i64, 0usize);
    for (k, &open) in steps.iter().enumerate() {
        e += if open { 1 } else { -1 };
        if e < min {
            min = e;
            at = k;
        }
    }
    steps.rotate_left(at + 1);

    let mut seq = ParenSeq::with_capacity(2 * n_nodes);
    seq.push(Paren::Open);
    for &open in &steps[..2 * m] {
        seq.push(Paren::from_bit(open));
    }
    seq.push(Paren::Close);
    BpDocument { seq, source }
}

/// Input kinds recognised by [`load`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InputKind {
    Xml,
    Text,
    Packed,
}

/// Guesses the format of a complete input. Packed input is recognised by a
/// length header that matches the payload size exactly.
pub fn sniff(input: &[u8]) -> InputKind {
    if input.iter().find(|b| !b.is_ascii_whitespace()) == Some(&b'<') {
        return InputKind::Xml;
    }
    if input.len() >= 8 {
        let len = u64::from_le_bytes(input[..8].try_into().unwrap());
        if len.div_ceil(8) == (input.len() - 8) as u64 {
            return InputKind::Packed;
        }
    }
    InputKind::Text
}

/// Reads a whole document from a file, or standard input for `-`.
pub fn load(path: &str) -> Result<BpDocument> {
    let mut bytes = Vec::new();
    if path == "-" {
        std::io::stdin().lock().read_to_end(&mut bytes)?;
    } else {
        std::fs::File::open(path)
            .map_err(|e| Error::Io(format!("{path}: {e}")))?
            .read_to_end(&mut bytes)?;
    }
    let name = if path == "-" { "<stdin>" } else { path };
    match sniff(&bytes) {
        InputKind::Xml => xml_to_bp(&bytes[..], name),
        InputKind::Text => parse_bp_text(&bytes[..], TextOptions::default(), name),
        InputKind::Packed => parse_bp_packed(&bytes[..], name),
    }
}
