use std::collections::VecDeque;

use super::SearchError;
use crate::model::{HiddenState, Model, RootInput};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct BfsResult<T> {
    pub action: usize,
    /// `r + gamma * V(child)` per root action; `None` where the budget ran out first.
    pub root_q: Vec<Option<T>>,
    pub expansions: usize,
}

struct BfsNode<T> {
    state: HiddenState<T>,
    value: T,
    terminal: bool,
    children: Vec<Option<(T, usize)>>,
}

/// Breadth-first planner. Expands `(node, action)` pairs in first-in-first-out
/// order, action index order among siblings, one budget unit each. Values back
/// up by maximum over expanded children; unexpanded frontier nodes keep their
/// model value. With `discount` off the backup is undiscounted.
pub fn bfs_plan<T: Scalar, M: Model<T> + ?Sized>(
    model: &M,
    root: &RootInput<'_>,
    budget: usize,
    gamma: T,
    discount: bool,
) -> Result<BfsResult<T>, SearchError> {
    if budget == 0 {
        return Err(SearchError::ZeroBudget);
    }
    if root.env.is_some_and(|e| e.is_terminal()) {
        return Err(SearchError::TerminalRoot);
    }
    let gamma = if discount { gamma } else { T::one() };
    let num_actions = model.num_actions();
    let init = model.initial_inference(root)?;
    let mut nodes = vec![BfsNode {
        state: init.state,
        value: init.value,
        terminal: false,
        children: vec![None; num_actions],
    }];
    let mut queue = VecDeque::from([0usize]);
    let mut expansions = 0;
    'outer: while let Some(id) = queue.pop_front() {
        for action in 0..num_actions {
            if expansions == budget {
                break 'outer;
            }
            let out = model.recurrent_inference(&nodes[id].state, action)?;
            expansions += 1;
            let child = nodes.len();
            nodes.push(BfsNode {
                state: out.next_state,
                value: if out.terminal { T::zero() } else { out.value },
                terminal: out.terminal,
                children: vec![None; num_actions],
            });
            nodes[id].children[action] = Some((out.reward, child));
            if !out.terminal {
                queue.push_back(child);
            }
        }
    }

    // Children always have larger ids than parents, so one reverse sweep suffices.
    let mut values: Vec<T> = nodes.iter().map(|n| n.value).collect();
    for id in (0..nodes.len()).rev() {
        if nodes[id].terminal {
            continue;
        }
        let best = nodes[id]
            .children
            .iter()
            .flatten()
            .map(|&(r, c)| r + gamma * values[c])
            .fold(None, |acc: Option<T>, q| Some(acc.map_or(q, |a| a.max(q))));
        if let Some(best) = best {
            values[id] = best;
        }
    }
    let root_q: Vec<Option<T>> = nodes[0]
        .children
        .iter()
        .map(|c| c.map(|(r, child)| r + gamma * values[child]))
        .collect();
    let mut action = 0;
    for (a, q) in root_q.iter().enumerate() {
        if let Some(q) = *q {
            match root_q[action] {
                Some(best) if q <= best => {}
                _ => action = a,
            }
        }
    }
    Ok(BfsResult {
        action,
        root_q,
        expansions,
    })
}
