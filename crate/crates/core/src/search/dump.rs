use std::fmt::Write;

use super::tree::{NodeId, SearchTree};
use crate::scalar::Scalar;

/// Text rendering of every edge, depth-first from the root in action order:
/// `depth path visits q prior reward`, one row per edge. Unexpanded edges are
/// included. `path` lists the actions from the root, joined by `.`.
pub fn dump_tree<T: Scalar>(tree: &SearchTree<T>) -> String {
    let mut out = String::from("depth\tpath\tvisits\tq\tprior\treward\n");
    let mut stack: Vec<(NodeId, String)> = vec![(SearchTree::<T>::ROOT, String::new())];
    while let Some((id, prefix)) = stack.pop() {
        let node = tree.node(id);
        let mut children = Vec::new();
        for (a, e) in node.edges.iter().enumerate() {
            let path = if prefix.is_empty() {
                a.to_string()
            } else {
                format!("{prefix}.{a}")
            };
            writeln!(
                out,
                "{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}",
                node.depth,
                path,
                e.visits,
                e.q.as_f64(),
                e.prior.as_f64(),
                e.reward.as_f64()
            )
            .expect("write to string");
            if let Some(c) = e.child {
                children.push((c, path));
            }
        }
        stack.extend(children.into_iter().rev());
    }
    out
}
