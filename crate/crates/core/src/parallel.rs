//! Order-preserving parallel map. Results never depend on the thread count
//! because each item is computed independently.

pub(crate) fn par_map<T, R, F>(items: &[T], threads: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    if threads <= 1 || items.len() < 2 {
        return items.iter().map(f).collect();
    }
    let chunk = items.len().div_ceil(threads);
    std::thread::scope(|s| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|c| s.spawn(|| c.iter().map(&f).collect::<Vec<R>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker thread panicked"))
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::par_map;

    #[test]
    fn same_result_for_any_thread_count() {
        let v: Vec<u64> = (0..1000).collect();
        let one = par_map(&v, 1, |x| x * x + 1);
        for t in [2, 3, 8] {
            assert_eq!(par_map(&v, t, |x| x * x + 1), one);
        }
    }
}
