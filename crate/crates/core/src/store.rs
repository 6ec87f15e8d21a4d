//! Node storage interface.
//!
//! Tree algorithms are written against [`NodeRead`] / [`NodeWrite`] so the
//! same code runs on a private [`LocalStore`], inside a speculative
//! transaction, or on any other backend (e.g. a hardware-transactional one)
//! that can hand out node images by id.

use crate::error::Error;
use crate::bp::NodeSummary;
use crate::node::{NodeId, RawNode};

/// Root reference and number of levels (a lone leaf has height 1).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Header {
    pub root: NodeId,
    pub height: u32,
}

/// Why a tree operation stopped early.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Fault {
    /// The store detected a concurrent conflict; the attempt must be retried.
    Conflict,
    /// The operation itself failed (bad position, unbalanced wrap, ...).
    Op(Error),
}

impl From<Error> for Fault {
    fn from(e: Error) -> Self {
        Fault::Op(e)
    }
}

impl Fault {
    /// For stores that never conflict.
    pub(crate) fn into_error(self) -> Error {
        match self {
            Fault::Op(e) => e,
            Fault::Conflict => unreachable!("sequential store reported a conflict"),
        }
    }
}

pub trait NodeRead {
    /// Leaf capacity in parentheses; fixed for the lifetime of a tree.
    fn leaf_cap(&self) -> usize;
    fn header(&mut self) -> Result<Header, Fault>;
    fn node(&mut self, id: NodeId) -> Result<RawNode, Fault>;

    fn summary(&mut self, id: NodeId) -> Result<NodeSummary, Fault> {
        Ok(self.node(id)?.summary())
    }
}

pub trait NodeWrite: NodeRead {
    fn set_header(&mut self, h: Header) -> Result<(), Fault>;
    fn put(&mut self, id: NodeId, node: RawNode) -> Result<(), Fault>;
    /// Reserves a fresh node id. Its contents are undefined until `put`.
    fn alloc(&mut self) -> Result<NodeId, Fault>;
    /// Returns a node to the store once it is unreachable.
    fn release(&mut self, id: NodeId) -> Result<(), Fault>;
}

/// Nodes touched by the most recent update on a [`LocalStore`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Footprint {
    pub nodes_read: usize,
    pub written: Vec<NodeId>,
    pub allocated: Vec<NodeId>,
    pub released: Vec<NodeId>,
}

/// Plain single-owner node storage. Id 0 is reserved.
#[derive(Clone, Debug)]
pub struct LocalStore {
    nodes: Vec<RawNode>,
    free: Vec<NodeId>,
    header: Header,
    leaf_cap: usize,
    footprint: Footprint,
}

impl LocalStore {
    pub(crate) fn new(leaf_cap: usize) -> Self {
        LocalStore {
            nodes: vec![RawNode::default()],
            free: Vec::new(),
            header: Header { root: 0, height: 0 },
            leaf_cap,
            footprint: Footprint::default(),
        }
    }

    pub(crate) fn from_parts(nodes: Vec<RawNode>, free: Vec<NodeId>, header: Header, leaf_cap: usize) -> Self {
        LocalStore { nodes, free, header, leaf_cap, footprint: Footprint::default() }
    }

    pub(crate) fn push(&mut self, node: RawNode) -> NodeId {
        let id = self.nodes.len() as NodeId;
        self.nodes.push(node);
        id
    }

    pub(crate) fn set_header_direct(&mut self, h: Header) {
        self.header = h;
    }

    pub(crate) fn header_direct(&self) -> Header {
        self.header
    }

    /// All slots including the reserved id 0 and freed ones.
    pub(crate) fn slots(&self) -> &[RawNode] {
        &self.nodes
    }

    pub(crate) fn free_list(&self) -> &[NodeId] {
        &self.free
    }

    pub(crate) fn get(&self, id: NodeId) -> &RawNode {
        &self.nodes[id as usize]
    }

    #[cfg(test)]
    pub(crate) fn get_mut(&mut self, id: NodeId) -> &mut RawNode {
        &mut self.nodes[id as usize]
    }

    pub(crate) fn footprint(&self) -> &Footprint {
        &self.footprint
    }

    pub(crate) fn reset_footprint(&mut self) {
        self.footprint.nodes_read = 0;
        self.footprint.written.clear();
        self.footprint.allocated.clear();
        self.footprint.released.clear();
    }

    /// Number of live nodes.
    pub(crate) fn live_nodes(&self) -> usize {
        self.nodes.len() - 1 - self.free.len()
    }
}

impl NodeRead for LocalStore {
    fn leaf_cap(&self) -> usize {
        self.leaf_cap
    }

    fn header(&mut self) -> Result<Header, Fault> {
        Ok(self.header)
    }

    fn node(&mut self, id: NodeId) -> Result<RawNode, Fault> {
        self.footprint.nodes_read += 1;
        Ok(self.nodes[id as usize])
    }
}

impl NodeRead for &LocalStore {
    fn leaf_cap(&self) -> usize {
        self.leaf_cap
    }

    fn header(&mut self) -> Result<Header, Fault> {
        Ok(self.header)
    }

    fn node(&mut self, id: NodeId) -> Result<RawNode, Fault> {
        Ok(self.nodes[id as usize])
    }
}

impl NodeWrite for LocalStore {
    fn set_header(&mut self, h: Header) -> Result<(), Fault> {
        self.header = h;
        Ok(())
    }

    fn put(&mut self, id: NodeId, node: RawNode) -> Result<(), Fault> {
        self.nodes[id as usize] = node;
        if !self.footprint.written.contains(&id) {
            self.footprint.written.push(id);
        }
        Ok(())
    }

    fn alloc(&mut self) -> Result<NodeId, Fault> {
        let id = match self.free.pop() {
            Some(id) => id,
            None => {
                if self.nodes.len() > NodeId::MAX as usize {
                    return Err(Fault::Op(Error::TooLarge { len: self.nodes.len() }));
                }
                self.push(RawNode::default())
            }
        };
        self.footprint.allocated.push(id);
        Ok(id)
    }

    fn release(&mut self, id: NodeId) -> Result<(), Fault> {
        self.nodes[id as usize] = RawNode::default();
        self.free.push(id);
        self.footprint.released.push(id);
        Ok(())
    }
}
