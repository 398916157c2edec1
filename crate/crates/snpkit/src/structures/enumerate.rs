use super::canon::next_permutation;
use super::{Elem, Signature, Structure, Tuple};
use crate::budget::Budget;
use crate::error::{Error, Result};
use rand::Rng;
use std::sync::Arc;

/// Number of structures of exactly `size` elements, if it fits in `u128`.
pub fn structure_count(sig: &Signature, size: usize) -> Option<u128> {
    let bits = slot_count(sig, size)?;
    if bits >= 128 {
        None
    } else {
        Some(1u128 << bits)
    }
}

fn slot_count(sig: &Signature, size: usize) -> Option<u32> {
    let mut bits: u64 = 0;
    for s in sig.symbols() {
        bits = bits.checked_add((size as u64).checked_pow(s.arity as u32)?)?;
    }
    u32::try_from(bits).ok()
}

fn slots(sig: &Signature, size: usize) -> Vec<(usize, Tuple)> {
    let mut out = Vec::new();
    for (sym, s) in sig.symbols().iter().enumerate() {
        let mut t: Tuple = std::iter::repeat_n(0, s.arity).collect();
        loop {
            out.push((sym, t.clone()));
            let mut i = s.arity;
            loop {
                if i == 0 {
                    break;
                }
                i -= 1;
                t[i] += 1;
                if (t[i] as usize) < size {
                    break;
                }
                t[i] = 0;
                if i == 0 {
                    i = usize::MAX;
                    break;
                }
            }
            if i == usize::MAX || s.arity == 0 {
                break;
            }
        }
    }
    out
}

/// Iterates over all standard structures of sizes `min_size..=max_size`,
/// ordered by size and then by the bitmask over tuple slots (slots ordered by
/// symbol, then lexicographically).
pub struct StructureIter {
    sig: Arc<Signature>,
    size: usize,
    max_size: usize,
    slots: Vec<(usize, Tuple)>,
    mask: u64,
    end: u64,
    perms: Option<Vec<Vec<usize>>>,
}

impl StructureIter {
    pub fn new(sig: Arc<Signature>, min_size: usize, max_size: usize) -> Result<Self> {
        for n in min_size.max(1)..=max_size {
            match slot_count(&sig, n) {
                Some(b) if b <= 63 => {}
                _ => {
                    return Err(Error::Unsupported(format!(
                        "structures of size {n} over this signature have too many tuple slots to enumerate"
                    )))
                }
            }
        }
        let mut it = StructureIter {
            sig,
            size: min_size.max(1),
            max_size,
            slots: Vec::new(),
            mask: 0,
            end: 0,
            perms: None,
        };
        it.start_size();
        Ok(it)
    }

    /// Restricts to one representative per isomorphism class: the structure
    /// whose slot mask is smallest among all relabellings.
    pub fn up_to_iso(mut self) -> Self {
        self.perms = Some(Vec::new());
        self.start_size();
        self
    }

    fn start_size(&mut self) {
        if self.size > self.max_size {
            return;
        }
        self.slots = slots(&self.sig, self.size);
        self.mask = 0;
        self.end = 1u64 << self.slots.len();
        if let Some(perms) = &mut self.perms {
            // each non-identity permutation as a slot-index permutation
            perms.clear();
            let mut p: Vec<Elem> = (0..self.size as Elem).collect();
            while next_permutation(&mut p) {
                let perm: Vec<usize> = self
                    .slots
                    .iter()
                    .map(|(s, t)| {
                        let img: Tuple = t.iter().map(|&e| p[e as usize]).collect();
                        self.slots.iter().position(|(s2, t2)| s2 == s && *t2 == img).unwrap()
                    })
                    .collect();
                perms.push(perm);
            }
        }
    }

    fn is_min(&self, mask: u64) -> bool {
        let Some(perms) = &self.perms else { return true };
        perms.iter().all(|perm| {
            let mut img = 0u64;
            for (i, &j) in perm.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    img |= 1 << j;
                }
            }
            img >= mask
        })
    }

    fn build(&self, mask: u64) -> Structure {
        let mut s = Structure::new(self.sig.clone(), self.size);
        for (i, (sym, t)) in self.slots.iter().enumerate() {
            if mask >> i & 1 == 1 {
                s.insert(*sym, t);
            }
        }
        s
    }
}

impl Iterator for StructureIter {
    type Item = Structure;

    fn next(&mut self) -> Option<Structure> {
        loop {
            if self.size > self.max_size {
                return None;
            }
            if self.mask >= self.end {
                self.size += 1;
                self.start_size();
                continue;
            }
            let m = self.mask;
            self.mask += 1;
            if self.is_min(m) {
                return Some(self.build(m));
            }
        }
    }
}

/// All structures of size `1..=max_size` accepted by `filter`. Fails with a
/// budget error up front when the total count exceeds the structure cap.
pub fn enumerate_structures(
    sig: &Arc<Signature>,
    max_size: usize,
    budget: &Budget,
    mut filter: impl FnMut(&Structure) -> bool,
) -> Result<Vec<Structure>> {
    let meter = budget.meter("enumerate_structures");
    let mut total: u128 = 0;
    for n in 1..=max_size {
        total = total.saturating_add(structure_count(sig, n).unwrap_or(u128::MAX));
    }
    meter.reserve_structures(total)?;
    Ok(StructureIter::new(sig.clone(), 1, max_size)?.filter(|s| filter(s)).collect())
}

/// Each tuple slot is present independently with probability `density`.
pub fn random_structure(sig: &Arc<Signature>, size: usize, density: f64, rng: &mut impl Rng) -> Structure {
    let mut s = Structure::new(sig.clone(), size);
    for (sym, t) in slots(sig, size) {
        if rng.gen_bool(density) {
            s.insert(sym, &t);
        }
    }
    s
}
