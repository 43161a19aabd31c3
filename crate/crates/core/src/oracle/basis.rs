//! Multi-mode Fock basis truncated at a total excitation number.

use std::collections::HashMap;

/// One ladder link: neighbor state index, mode index and `sqrt(n)` factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub state: u32,
    pub mode: u32,
    pub factor: f64,
}

/// All occupations `n` with `Σ n_k <= cutoff`, plus their `a_k` links.
///
/// `lower(i)` lists states `i - e_k` (reached by `a_k`, factor `sqrt(n_k)`);
/// `upper(i)` lists states `i + e_k` (reached by `a_k†`, factor `sqrt(n_k + 1)`).
#[derive(Debug, Clone)]
pub struct FockBasis {
    modes: usize,
    cutoff: usize,
    occupations: Vec<u8>,
    totals: Vec<u32>,
    lower_ptr: Vec<usize>,
    lower: Vec<Link>,
    upper_ptr: Vec<usize>,
    upper: Vec<Link>,
}

/// Number of states with `Σ n_k <= cutoff` over `modes` modes: `C(modes + cutoff, cutoff)`.
pub fn fock_dimension(modes: usize, cutoff: usize) -> f64 {
    (1..=cutoff).fold(1.0, |acc, k| acc * (modes + k) as f64 / k as f64)
}

impl FockBasis {
    pub fn new(modes: usize, cutoff: usize) -> Self {
        assert!(cutoff < 256, "cutoff must fit in a byte");
        let mut occupations = Vec::new();
        let mut current = vec![0u8; modes];
        enumerate(&mut current, 0, cutoff, &mut occupations);
        let nb = occupations.len() / modes.max(1);
        let nb = if modes == 0 { 1 } else { nb };
        let mut index: HashMap<&[u8], u32> = HashMap::with_capacity(nb);
        if modes > 0 {
            for i in 0..nb {
                index.insert(&occupations[i * modes..(i + 1) * modes], i as u32);
            }
        }
        let mut totals = Vec::with_capacity(nb);
        let mut lower_ptr = Vec::with_capacity(nb + 1);
        let mut lower = Vec::new();
        lower_ptr.push(0);
        let mut scratch = vec![0u8; modes];
        for i in 0..nb {
            let occ = &occupations[i * modes..(i + 1) * modes];
            totals.push(occ.iter().map(|&n| n as u32).sum());
            for (k, &n) in occ.iter().enumerate() {
                if n > 0 {
                    scratch.copy_from_slice(occ);
                    scratch[k] -= 1;
                    lower.push(Link {
                        state: index[scratch.as_slice()],
                        mode: k as u32,
                        factor: (n as f64).sqrt(),
                    });
                }
            }
            lower_ptr.push(lower.len());
        }
        drop(index);

        // Invert the lower links: i = j + e_k is an upper neighbor of j with the same factor.
        let mut counts = vec![0usize; nb + 1];
        for l in &lower {
            counts[l.state as usize + 1] += 1;
        }
        for i in 0..nb {
            counts[i + 1] += counts[i];
        }
        let upper_ptr = counts.clone();
        let mut fill = counts;
        let mut upper = vec![
            Link {
                state: 0,
                mode: 0,
                factor: 0.0
            };
            lower.len()
        ];
        for i in 0..nb {
            for l in &lower[lower_ptr[i]..lower_ptr[i + 1]] {
                let j = l.state as usize;
                upper[fill[j]] = Link {
                    state: i as u32,
                    mode: l.mode,
                    factor: l.factor,
                };
                fill[j] += 1;
            }
        }
        Self {
            modes,
            cutoff,
            occupations,
            totals,
            lower_ptr,
            lower,
            upper_ptr,
            upper,
        }
    }

    pub fn len(&self) -> usize {
        self.totals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.totals.is_empty()
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn occupation(&self, i: usize) -> &[u8] {
        &self.occupations[i * self.modes..(i + 1) * self.modes]
    }

    /// Total excitation number of state `i`.
    pub fn total(&self, i: usize) -> u32 {
        self.totals[i]
    }

    pub fn lower(&self, i: usize) -> &[Link] {
        &self.lower[self.lower_ptr[i]..self.lower_ptr[i + 1]]
    }

    pub fn upper(&self, i: usize) -> &[Link] {
        &self.upper[self.upper_ptr[i]..self.upper_ptr[i + 1]]
    }
}

fn enumerate(current: &mut [u8], k: usize, left: usize, out: &mut Vec<u8>) {
    if k == current.len() {
        out.extend_from_slice(current);
        return;
    }
    for n in 0..=left {
        current[k] = n as u8;
        enumerate(current, k + 1, left - n, out);
    }
    current[k] = 0;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimension_formula() {
        for (m, c) in [(1, 3), (3, 2), (5, 3), (10, 0)] {
            assert_eq!(FockBasis::new(m, c).len() as f64, fock_dimension(m, c));
        }
        assert_eq!(fock_dimension(28, 3), 4495.0);
    }

    #[test]
    fn links_are_consistent() {
        let b = FockBasis::new(4, 3);
        for i in 0..b.len() {
            for l in b.lower(i) {
                let j = l.state as usize;
                let k = l.mode as usize;
                assert_eq!(b.occupation(j)[k] + 1, b.occupation(i)[k]);
                assert_eq!(l.factor, (b.occupation(i)[k] as f64).sqrt());
                assert!(b.upper(j).iter().any(|u| u.state as usize == i && u.mode == l.mode));
            }
            assert_eq!(
                b.upper(i).len(),
                if b.total(i) < 3 { 4 } else { 0 },
                "state {:?}",
                b.occupation(i)
            );
        }
    }
}
