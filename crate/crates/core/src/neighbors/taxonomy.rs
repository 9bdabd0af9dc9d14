//! A rooted is-a taxonomy (DAG) with Wu-Palmer similarity.
//!
//! Depth convention: the root has depth 1 and every other node has depth
//! `1 + longest path to the root`, so an ancestor is always strictly
//! shallower than its descendants.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::io::{BufRead, BufReader, Read};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Taxonomy {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    parents: Vec<Vec<usize>>,
    terms: HashMap<String, Vec<usize>>,
    depth: Vec<usize>,
    root: usize,
}

impl Taxonomy {
    /// Builds a taxonomy from `(synset, parent)` edges (`None` marks the root)
    /// and `(term, synset)` lexicalizations.
    pub fn new(edges: &[(String, Option<String>)], terms: &[(String, String)]) -> Result<Self> {
        let mut ids: Vec<String> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut intern = |id: &str, ids: &mut Vec<String>| -> usize {
            if let Some(&i) = index.get(id) {
                return i;
            }
            ids.push(id.to_string());
            index.insert(id.to_string(), ids.len() - 1);
            ids.len() - 1
        };
        let mut parent_pairs = Vec::new();
        for (child, parent) in edges {
            let c = intern(child, &mut ids);
            if let Some(p) = parent {
                let p = intern(p, &mut ids);
                parent_pairs.push((c, p));
            }
        }
        let n = ids.len();
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        for (c, p) in parent_pairs {
            if c == p {
                return Err(Error::Taxonomy(format!("`{}` is its own parent", ids[c])));
            }
            if !parents[c].contains(&p) {
                parents[c].push(p);
                children[p].push(c);
            }
        }
        let roots: Vec<usize> = (0..n).filter(|&i| parents[i].is_empty()).collect();
        let root = match roots.as_slice() {
            [r] => *r,
            [] if n == 0 => return Err(Error::Taxonomy("empty taxonomy".into())),
            [] => return Err(Error::Taxonomy("no root: every node has a parent (cycle)".into())),
            many => {
                let names: Vec<&str> = many.iter().take(5).map(|&i| ids[i].as_str()).collect();
                return Err(Error::Taxonomy(format!("multiple roots: {}", names.join(", "))));
            }
        };

        // Kahn's algorithm from the root; unvisited nodes sit on a cycle.
        let mut pending: Vec<usize> = parents.iter().map(Vec::len).collect();
        let mut depth = vec![0usize; n];
        depth[root] = 1;
        let mut queue = VecDeque::from([root]);
        let mut visited = 0;
        while let Some(u) = queue.pop_front() {
            visited += 1;
            for &c in &children[u] {
                depth[c] = depth[c].max(depth[u] + 1);
                pending[c] -= 1;
                if pending[c] == 0 {
                    queue.push_back(c);
                }
            }
        }
        if visited != n {
            let stuck: Vec<&str> = (0..n).filter(|&i| pending[i] > 0).take(5).map(|i| ids[i].as_str()).collect();
            return Err(Error::Taxonomy(format!("cycle involving {}", stuck.join(", "))));
        }

        let mut term_map: HashMap<String, Vec<usize>> = HashMap::new();
        for (term, synset) in terms {
            let &s = index
                .get(synset)
                .ok_or_else(|| Error::Taxonomy(format!("term `{term}` maps to unknown synset `{synset}`")))?;
            let entry = term_map.entry(term.clone()).or_default();
            if !entry.contains(&s) {
                entry.push(s);
            }
        }
        Ok(Taxonomy {
            ids,
            index,
            parents,
            terms: term_map,
            depth,
            root,
        })
    }

    /// Parses `synset\tparent` lines (parent `-` for the root); after a
    /// `#terms` line, parses `term\tsynset` lines. `#edges` switches back;
    /// other `#` lines are comments.
    pub fn read<R: Read>(source: R) -> Result<Self> {
        let mut edges = Vec::new();
        let mut terms = Vec::new();
        let mut in_terms = false;
        for (i, line) in BufReader::new(source).lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            match trimmed {
                "" => continue,
                "#terms" => in_terms = true,
                "#edges" => in_terms = false,
                _ if trimmed.starts_with('#') => continue,
                _ => {
                    let (a, b) = line.split_once('\t').ok_or_else(|| Error::Parse {
                        line: i + 1,
                        reason: "expected two tab-separated fields".into(),
                    })?;
                    let (a, b) = (a.trim().to_string(), b.trim().to_string());
                    if in_terms {
                        terms.push((a, b));
                    } else {
                        edges.push((a, (b != "-").then_some(b)));
                    }
                }
            }
        }
        Taxonomy::new(&edges, &terms)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn root(&self) -> &str {
        &self.ids[self.root]
    }

    pub fn depth(&self, synset: &str) -> Option<usize> {
        self.index.get(synset).map(|&i| self.depth[i])
    }

    pub fn synsets(&self, term: &str) -> Vec<&str> {
        self.terms
            .get(term)
            .map(|v| v.iter().map(|&i| self.ids[i].as_str()).collect())
            .unwrap_or_default()
    }

    fn ancestors(&self, node: usize) -> BTreeSet<usize> {
        let mut seen = BTreeSet::from([node]);
        let mut stack = vec![node];
        while let Some(u) = stack.pop() {
            for &p in &self.parents[u] {
                if seen.insert(p) {
                    stack.push(p);
                }
            }
        }
        seen
    }

    fn synset_similarity(&self, a: usize, b: usize) -> f64 {
        let anc_a = self.ancestors(a);
        let lcs_depth = self
            .ancestors(b)
            .intersection(&anc_a)
            .map(|&c| self.depth[c])
            .max()
            .expect("the root is a common ancestor");
        2.0 * lcs_depth as f64 / (self.depth[a] + self.depth[b]) as f64
    }

    /// Maximum Wu-Palmer score over all synset pairs of the two terms, or
    /// `None` when either term is absent.
    pub fn wu_palmer(&self, a: &str, b: &str) -> Option<f64> {
        let sa = self.terms.get(a)?;
        let sb = self.terms.get(b)?;
        sa.iter()
            .flat_map(|&x| sb.iter().map(move |&y| (x, y)))
            .map(|(x, y)| self.synset_similarity(x, y))
            .max_by(f64::total_cmp)
    }
}

/// Free-function form of [`Taxonomy::wu_palmer`].
pub fn wu_palmer(tax: &Taxonomy, a: &str, b: &str) -> Option<f64> {
    tax.wu_palmer(a, b)
}
