//! Index-tuple enumeration shared by the solvers: plain tuples (odometer
//! order), sorted tuples (multisets), and multiplicity extraction.

/// Visits all `m^n` index tuples in lexicographic (odometer) order.
pub(crate) fn for_each_tuple(m: usize, n: usize, mut f: impl FnMut(&[usize])) {
    if m == 0 {
        return;
    }
    let mut t = vec![0usize; n];
    loop {
        f(&t);
        let mut k = n;
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            t[k] += 1;
            if t[k] < m {
                break;
            }
            t[k] = 0;
            if k == 0 {
                return;
            }
        }
    }
}

/// Reconstructs the tuple with the given odometer rank.
pub(crate) fn tuple_from_rank(mut rank: usize, m: usize, n: usize) -> Vec<usize> {
    let mut t = vec![0usize; n];
    for k in (0..n).rev() {
        t[k] = rank % m;
        rank /= m;
    }
    t
}

/// All nondecreasing index tuples of length `k` over `0..m` (multisets),
/// in lexicographic order.
pub(crate) fn multisets(m: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if m == 0 {
        return out;
    }
    let mut t = vec![0usize; k];
    loop {
        out.push(t.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if t[i] + 1 < m {
                let v = t[i] + 1;
                for slot in t.iter_mut().skip(i) {
                    *slot = v;
                }
                break;
            }
            if i == 0 {
                return out;
            }
        }
    }
}

/// Heap's algorithm: visits all `k!` permutations of `0..k`.
pub(crate) fn for_each_permutation(k: usize, mut f: impl FnMut(&[usize])) {
    let mut a: Vec<usize> = (0..k).collect();
    let mut c = vec![0usize; k];
    f(&a);
    let mut i = 0;
    while i < k {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            f(&a);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// `(index, multiplicity)` pairs of a sorted tuple.
pub(crate) fn multiplicities(sorted: &[usize]) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = Vec::new();
    for &i in sorted {
        match out.last_mut() {
            Some((j, c)) if *j == i => *c += 1,
            _ => out.push((i, 1)),
        }
    }
    out
}
