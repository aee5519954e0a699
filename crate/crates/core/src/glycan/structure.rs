use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

use super::residue::ResidueRegistry;

/// Glycosidic linkage `(anomer-position)`; the position on the parent may be
/// unknown. Linkages never affect mass.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Linkage {
    /// Anomeric carbon of the child, optionally with its configuration
    /// (`1`, `2`, `a1`, `b2`, `?`).
    pub anomer: String,
    pub position: Option<u8>,
}

impl Linkage {
    pub fn new(anomer: impl Into<String>, position: Option<u8>) -> Self {
        Self { anomer: anomer.into(), position }
    }

    fn sort_key(&self) -> (u8, &str) {
        (self.position.unwrap_or(u8::MAX), &self.anomer)
    }
}

impl fmt::Display for Linkage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.position {
            Some(p) => write!(f, "({}-{})", self.anomer, p),
            None => write!(f, "({}-?)", self.anomer),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ResidueNode {
    pub residue: String,
    /// Linkage to the parent; `None` only for the reducing-end root.
    pub linkage: Option<Linkage>,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
}

/// Rooted residue tree. Nodes are stored in canonical preorder: node 0 is the
/// reducing-end root and siblings are ordered by (linkage position, residue
/// code, subtree encoding), so structural equality is plain `==`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GlycanStructure {
    id: String,
    nodes: Vec<ResidueNode>,
}

/// Recursive form used while parsing and canonicalising.
#[derive(Debug, Clone)]
pub(crate) struct TreeSpec {
    pub residue: String,
    pub children: Vec<(Linkage, TreeSpec)>,
}

impl TreeSpec {
    fn canonicalize(&mut self) {
        for (_, child) in &mut self.children {
            child.canonicalize();
        }
        let mut keyed: Vec<(String, (Linkage, TreeSpec))> =
            self.children.drain(..).map(|c| (encode_spec(&c.1), c)).collect();
        keyed.sort_by(|(ea, (la, ta)), (eb, (lb, tb))| {
            la.sort_key()
                .0
                .cmp(&lb.sort_key().0)
                .then_with(|| ta.residue.cmp(&tb.residue))
                .then_with(|| ea.cmp(eb))
                .then_with(|| la.sort_key().1.cmp(lb.sort_key().1))
        });
        self.children = keyed.into_iter().map(|(_, c)| c).collect();
    }
}

fn encode_spec(tree: &TreeSpec) -> String {
    let mut out = String::new();
    write_spec(tree, &mut out);
    out
}

fn write_spec(tree: &TreeSpec, out: &mut String) {
    for (idx, (link, child)) in tree.children.iter().enumerate() {
        if idx > 0 {
            out.push('[');
        }
        write_spec(child, out);
        out.push_str(&link.to_string());
        if idx > 0 {
            out.push(']');
        }
    }
    out.push_str(&tree.residue);
}

pub(crate) fn validate_id(id: &str) -> Result<()> {
    if id.is_empty() || id.chars().any(|c| c.is_whitespace() || matches!(c, '|' | ';' | '@' | '*')) {
        return Err(Error::Config(format!(
            "glycan id `{id}` must be non-empty without whitespace or any of | ; @ *"
        )));
    }
    Ok(())
}

impl GlycanStructure {
    /// Parses the linear encoding: residues are written from the non-reducing
    /// end towards the root, `X(a-p)Y` attaches X to position p of Y, and
    /// bracketed branches attach to the residue following the bracket.
    pub fn parse(id: &str, text: &str, registry: &ResidueRegistry) -> Result<Self> {
        validate_id(id)?;
        let mut parser = Parser { text, bytes: text.as_bytes(), pos: 0, registry };
        let piece = parser.chain(false)?;
        if piece.link.is_some() {
            return Err(Error::Syntax { offset: text.len(), message: "encoding ends with a dangling linkage".into() });
        }
        Ok(Self::from_spec(id.to_string(), piece.tree))
    }

    pub(crate) fn from_spec(id: String, mut spec: TreeSpec) -> Self {
        spec.canonicalize();
        let mut nodes = Vec::new();
        flatten(&spec, None, None, &mut nodes);
        Self { id, nodes }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[ResidueNode] {
        &self.nodes
    }

    pub fn node(&self, index: usize) -> &ResidueNode {
        &self.nodes[index]
    }

    /// Canonical linear encoding.
    pub fn encoding(&self) -> String {
        let mut out = String::new();
        self.write_node(0, &mut out);
        out
    }

    fn write_node(&self, index: usize, out: &mut String) {
        let node = &self.nodes[index];
        for (pos, &child) in node.children.iter().enumerate() {
            if pos > 0 {
                out.push('[');
            }
            self.write_node(child, out);
            if let Some(link) = &self.nodes[child].linkage {
                out.push_str(&link.to_string());
            }
            if pos > 0 {
                out.push(']');
            }
        }
        out.push_str(&node.residue);
    }

    /// Node indices of the subtree rooted at `index`, in preorder.
    pub fn subtree(&self, index: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![index];
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(self.nodes[n].children.iter().rev());
        }
        out
    }

    /// Builds the connected substructure spanned by `members` (a sorted set of
    /// node indices). Its root is the member closest to the reducing end.
    pub fn induced(&self, id: impl Into<String>, members: &[usize]) -> Self {
        let top = members
            .iter()
            .copied()
            .find(|&n| self.nodes[n].parent.is_none_or(|p| members.binary_search(&p).is_err()))
            .expect("non-empty member set");
        Self::from_spec(id.into(), self.spec_of(top, members))
    }

    fn spec_of(&self, index: usize, members: &[usize]) -> TreeSpec {
        let node = &self.nodes[index];
        TreeSpec {
            residue: node.residue.clone(),
            children: node
                .children
                .iter()
                .filter(|c| members.binary_search(c).is_ok())
                .map(|&c| {
                    let link = self.nodes[c].linkage.clone().expect("non-root has linkage");
                    (link, self.spec_of(c, members))
                })
                .collect(),
        }
    }
}

impl fmt::Display for GlycanStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.encoding())
    }
}

impl PartialOrd for GlycanStructure {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for GlycanStructure {
    fn cmp(&self, other: &Self) -> Ordering {
        self.id.cmp(&other.id).then_with(|| self.encoding().cmp(&other.encoding()))
    }
}

fn flatten(spec: &TreeSpec, parent: Option<usize>, link: Option<Linkage>, nodes: &mut Vec<ResidueNode>) {
    let index = nodes.len();
    nodes.push(ResidueNode { residue: spec.residue.clone(), linkage: link, parent, children: Vec::new() });
    if let Some(p) = parent {
        nodes[p].children.push(index);
    }
    for (child_link, child) in &spec.children {
        flatten(child, Some(index), Some(child_link.clone()), nodes);
    }
}

struct Piece {
    tree: TreeSpec,
    link: Option<Linkage>,
}

struct Parser<'a> {
    text: &'a str,
    bytes: &'a [u8],
    pos: usize,
    registry: &'a ResidueRegistry,
}

impl Parser<'_> {
    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn error(&self, offset: usize, message: impl Into<String>) -> Error {
        Error::Syntax { offset, message: message.into() }
    }

    fn chain(&mut self, nested: bool) -> Result<Piece> {
        let mut carried: Vec<(Linkage, TreeSpec)> = Vec::new();
        loop {
            while self.peek() == Some(b'[') {
                let open = self.pos;
                self.pos += 1;
                let branch = self.chain(true)?;
                if self.peek() != Some(b']') {
                    return Err(self.error(self.pos, format!("unclosed branch opened at byte {open}")));
                }
                self.pos += 1;
                match branch.link {
                    Some(link) => carried.push((link, branch.tree)),
                    None => return Err(self.error(open, "branch must end with a linkage")),
                }
            }
            let residue = self.residue_code()?;
            let tree = TreeSpec { residue, children: std::mem::take(&mut carried) };
            if self.peek() == Some(b'(') {
                let link = self.linkage()?;
                match self.peek() {
                    None | Some(b']') => return Ok(Piece { tree, link: Some(link) }),
                    _ => carried.push((link, tree)),
                }
                continue;
            }
            return match self.peek() {
                None if !nested => Ok(Piece { tree, link: None }),
                Some(b']') if nested => Err(self.error(self.pos, "branch must end with a linkage")),
                None => Err(self.error(self.pos, "unclosed branch")),
                Some(c) => Err(self.error(self.pos, format!("unexpected `{}`", c as char))),
            };
        }
    }

    fn residue_code(&mut self) -> Result<String> {
        let start = self.pos;
        while self.peek().is_some_and(|b| b.is_ascii_alphanumeric()) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(match self.peek() {
                Some(c) => self.error(start, format!("expected residue code, found `{}`", c as char)),
                None => self.error(start, "expected residue code, found end of input"),
            });
        }
        let code = &self.text[start..self.pos];
        if !self.registry.contains(code) {
            return Err(Error::UnknownResidue(code.to_string()));
        }
        Ok(code.to_string())
    }

    fn linkage(&mut self) -> Result<Linkage> {
        let open = self.pos;
        self.pos += 1;
        let anomer_start = self.pos;
        if matches!(self.peek(), Some(b'a' | b'b')) {
            self.pos += 1;
        }
        match self.peek() {
            Some(b'1'..=b'9' | b'?') => self.pos += 1,
            _ => return Err(self.error(self.pos, "expected anomeric carbon in linkage")),
        }
        let anomer = self.text[anomer_start..self.pos].to_string();
        if self.peek() != Some(b'-') {
            return Err(self.error(self.pos, "expected `-` in linkage"));
        }
        self.pos += 1;
        let position = match self.peek() {
            Some(d @ b'1'..=b'9') => Some(d - b'0'),
            Some(b'?') => None,
            _ => return Err(self.error(self.pos, "expected linkage position 1-9 or `?`")),
        };
        self.pos += 1;
        if self.peek() != Some(b')') {
            return Err(self.error(self.pos, format!("unclosed linkage opened at byte {open}")));
        }
        self.pos += 1;
        Ok(Linkage { anomer, position })
    }
}
