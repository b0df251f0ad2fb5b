use std::cell::Cell;
use std::collections::{HashMap, HashSet};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use super::Real;

static NEXT_ID: AtomicU64 = AtomicU64::new(0);

thread_local! {
    static GRAD_ENABLED: Cell<bool> = const { Cell::new(true) };
}

/// Whether ops on this thread currently record graph nodes.
pub fn grad_enabled() -> bool {
    GRAD_ENABLED.with(|g| g.get())
}

/// Runs `f` without recording any graph nodes on this thread.
pub fn no_grad<T>(f: impl FnOnce() -> T) -> T {
    struct Restore(bool);
    impl Drop for Restore {
        fn drop(&mut self) {
            GRAD_ENABLED.with(|g| g.set(self.0));
        }
    }
    let _restore = Restore(GRAD_ENABLED.with(|g| g.replace(false)));
    f()
}

type BackwardFn<F> = Box<dyn Fn(&[F], &[bool]) -> Vec<Option<Vec<F>>> + Send + Sync>;

/// One recorded op (or a leaf). Leaves own an accumulating gradient buffer.
pub(crate) struct Node<F: Real> {
    id: u64,
    len: usize,
    parents: Vec<Option<Arc<Node<F>>>>,
    needs: Vec<bool>,
    backward: Option<BackwardFn<F>>,
    grad: Mutex<Option<Vec<F>>>,
}

impl<F: Real> Node<F> {
    pub(crate) fn leaf(len: usize) -> Arc<Self> {
        Arc::new(Node {
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
            len,
            parents: Vec::new(),
            needs: Vec::new(),
            backward: None,
            grad: Mutex::new(None),
        })
    }

    pub(crate) fn op<B>(len: usize, parents: Vec<Option<Arc<Node<F>>>>, backward: B) -> Arc<Self>
    where
        B: Fn(&[F], &[bool]) -> Vec<Option<Vec<F>>> + Send + Sync + 'static,
    {
        let needs = parents.iter().map(Option::is_some).collect();
        Arc::new(Node {
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
            len,
            parents,
            needs,
            backward: Some(Box::new(backward)),
            grad: Mutex::new(None),
        })
    }

    pub(crate) fn is_leaf(&self) -> bool {
        self.backward.is_none()
    }

    pub(crate) fn grad(&self) -> Option<Vec<F>> {
        self.grad.lock().expect("grad lock").clone()
    }

    pub(crate) fn zero_grad(&self) {
        *self.grad.lock().expect("grad lock") = None;
    }

    fn accumulate(&self, g: &[F]) {
        let mut slot = self.grad.lock().expect("grad lock");
        match slot.as_mut() {
            Some(acc) => acc.iter_mut().zip(g).for_each(|(a, &b)| *a = *a + b),
            None => *slot = Some(g.to_vec()),
        }
    }
}

/// Walks every node reachable from `root` in strictly descending creation
/// order, which is a reverse topological order.
pub(crate) fn run_backward<F: Real>(root: &Arc<Node<F>>, seed: Vec<F>) {
    let mut seen = HashSet::new();
    let mut stack = vec![root.clone()];
    let mut order = Vec::new();
    while let Some(n) = stack.pop() {
        if !seen.insert(n.id) {
            continue;
        }
        for p in n.parents.iter().flatten() {
            if !seen.contains(&p.id) {
                stack.push(p.clone());
            }
        }
        order.push(n);
    }
    order.sort_by(|a, b| b.id.cmp(&a.id));

    let mut grads: HashMap<u64, Vec<F>> = HashMap::new();
    grads.insert(root.id, seed);
    for node in order {
        let Some(g) = grads.remove(&node.id) else {
            continue;
        };
        debug_assert_eq!(g.len(), node.len);
        let Some(backward) = &node.backward else {
            node.accumulate(&g);
            continue;
        };
        let outs = backward(&g, &node.needs);
        for (parent, out) in node.parents.iter().zip(outs) {
            let (Some(parent), Some(out)) = (parent, out) else {
                continue;
            };
            debug_assert_eq!(out.len(), parent.len);
            match grads.get_mut(&parent.id) {
                Some(acc) => acc.iter_mut().zip(&out).for_each(|(a, &b)| *a = *a + b),
                None => {
                    grads.insert(parent.id, out);
                }
            }
        }
    }
}
