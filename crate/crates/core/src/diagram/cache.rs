use std::cell::RefCell;
use std::collections::HashMap;

use super::basic::BasicDiagram;

const CACHE_LIMIT: usize = 1 << 16;

thread_local! {
    static KEYS: RefCell<HashMap<BasicDiagram, BasicDiagram>> = RefCell::new(HashMap::new());
}

/// Memoized canonical form. The cache is per thread, so results never depend
/// on scheduling.
pub(crate) fn canonical_cached(d: &BasicDiagram) -> BasicDiagram {
    if let Some(hit) = KEYS.with(|k| k.borrow().get(d).cloned()) {
        return hit;
    }
    let key = d.canonical_uncached();
    KEYS.with(|k| {
        let mut k = k.borrow_mut();
        if k.len() >= CACHE_LIMIT {
            k.clear();
        }
        k.insert(d.clone(), key.clone());
    });
    key
}
