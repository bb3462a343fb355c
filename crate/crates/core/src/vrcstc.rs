//! Syndrome-trellis embedding with a variable robustness cost.
//!
//! Every trellis state carries the tentative stego image of its surviving
//! path. A transition that flips a cover bit costs its distortion plus the
//! robustness penalty of the containing block, evaluated on the predecessor's
//! image with the tentative change applied. Non-flipping transitions cost
//! nothing. Because the penalty depends on earlier changes in the same block,
//! the total cost is not additive.
//!
//! State images are stored as persistent change lists over the shared cover,
//! so a transition copies a pointer instead of an image.

use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{diff_report, recompress_image, ChannelParams, ChannelReport};
use crate::codec::{CoefficientImage, BLOCK_LEN};
use crate::distortion::CostMap;
use crate::robustness::{block_cost, RobustnessConfig};
use crate::stc::{BitCover, SubMatrix};
use crate::{Error, Result, Scalar};

/// ±1 direction per coefficient, drawn once from a key.
#[derive(Debug, Clone)]
pub struct SignSource {
    signs: Vec<i8>,
}

impl SignSource {
    pub fn new(key: u64, len: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(key);
        Self {
            signs: (0..len).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect(),
        }
    }

    pub fn sign(&self, position: usize) -> i8 {
        self.signs[position]
    }

    /// Value after flipping the LSB of `|value|`; ±1 always moves away from zero.
    pub fn changed_value(&self, position: usize, value: i16) -> i16 {
        match value {
            1 => 2,
            -1 => -2,
            v => v + self.signs[position] as i16,
        }
    }
}

/// LSB of the coefficient magnitude.
#[inline]
pub fn cover_bit(value: i16) -> u8 {
    (value.unsigned_abs() & 1) as u8
}

/// Binary cover over `lattice` positions of `cover`, with costs from `cm`.
pub fn lattice_cover<T: Scalar>(cover: &CoefficientImage, lattice: &[usize], cm: &CostMap<T>) -> Result<BitCover<T>> {
    BitCover::with_wet_cap(
        lattice.iter().map(|&p| cover_bit(cover.get(p))).collect(),
        lattice.iter().map(|&p| cm.get(p)).collect(),
        cm.wet_cap(),
    )
}

/// Applies a binary stego sequence: every lattice position whose bit differs
/// from the cover bit is changed in the direction given by `signs`.
pub fn apply_stego_bits(cover: &CoefficientImage, lattice: &[usize], stego_bits: &[u8], signs: &SignSource) -> CoefficientImage {
    let mut out = cover.clone();
    for (&pos, &bit) in lattice.iter().zip(stego_bits) {
        let v = cover.get(pos);
        if cover_bit(v) != bit {
            out.set(pos, signs.changed_value(pos, v));
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct VrcstcParams<T> {
    pub hh: SubMatrix,
    pub config: RobustnessConfig<T>,
    /// Seed for the ±1 directions; only the sender needs it.
    pub rng_key: u64,
}

/// Snapshot of one trellis state.
#[derive(Debug, Clone, PartialEq)]
pub struct TrellisState<T> {
    pub weight: T,
    /// `(position, new value)` for every change on the surviving path, oldest first.
    pub changes: Vec<(usize, i16)>,
}

#[derive(Debug, Clone)]
pub struct VrcstcOutput<T> {
    pub stego: CoefficientImage,
    /// Final trellis weight (distortion plus penalties).
    pub weight: T,
    /// Summed distortion of the changes made.
    pub distortion: T,
    /// Number of changes that paid the robustness penalty.
    pub penalties: usize,
    /// Changed positions, in lattice order.
    pub changes: Vec<usize>,
}

struct Delta {
    pos: usize,
    value: i16,
    prev: Option<Rc<Delta>>,
}

impl Drop for Delta {
    fn drop(&mut self) {
        // unlink iteratively so long paths do not recurse
        let mut next = self.prev.take();
        while let Some(rc) = next {
            match Rc::try_unwrap(rc) {
                Ok(mut node) => next = node.prev.take(),
                Err(_) => break,
            }
        }
    }
}

type Path = Option<Rc<Delta>>;

fn path_changes(path: &Path) -> Vec<(usize, i16)> {
    let mut out = Vec::new();
    let mut cur = path.as_ref();
    while let Some(node) = cur {
        out.push((node.pos, node.value));
        cur = node.prev.as_ref();
    }
    out.reverse();
    out
}

fn path_touches_block(path: &Path, block: usize) -> bool {
    let mut cur = path.as_ref();
    while let Some(node) = cur {
        if node.pos / BLOCK_LEN == block {
            return true;
        }
        cur = node.prev.as_ref();
    }
    false
}

fn block_with_path(cover: &CoefficientImage, path: &Path, block: usize) -> [i16; 64] {
    let mut out = cover.block(block);
    let mut cur = path.as_ref();
    while let Some(node) = cur {
        if node.pos / BLOCK_LEN == block {
            out[node.pos % BLOCK_LEN] = node.value;
        }
        cur = node.prev.as_ref();
    }
    out
}

#[derive(Clone)]
struct Slot<T> {
    weight: T,
    distortion: T,
    penalties: usize,
    /// `None` marks an unreachable state.
    path: Option<Path>,
}

impl<T: Scalar> Slot<T> {
    fn unreachable() -> Self {
        Self {
            weight: T::infinity(),
            distortion: T::zero(),
            penalties: 0,
            path: None,
        }
    }
}

struct Trellis<'a, T> {
    cover: &'a CoefficientImage,
    lattice: &'a [usize],
    cm: &'a CostMap<T>,
    params: &'a VrcstcParams<T>,
    signs: SignSource,
    slots: Vec<Slot<T>>,
}

impl<'a, T: Scalar> Trellis<'a, T> {
    fn new(cover: &'a CoefficientImage, lattice: &'a [usize], cm: &'a CostMap<T>, params: &'a VrcstcParams<T>) -> Self {
        let mut slots = vec![Slot::unreachable(); params.hh.num_states()];
        slots[0] = Slot {
            weight: T::zero(),
            distortion: T::zero(),
            penalties: 0,
            path: Some(None),
        };
        Self {
            cover,
            lattice,
            cm,
            params,
            signs: SignSource::new(params.rng_key, cover.len()),
            slots,
        }
    }

    /// Candidate that reaches a state through predecessor `from`, flipping or not.
    fn candidate(&self, from: usize, flip: bool, pos: usize, new_value: i16, rho: T, solo: &mut Option<T>) -> Slot<T> {
        let pred = &self.slots[from];
        let path = match &pred.path {
            Some(p) => p,
            None => return Slot::unreachable(),
        };
        if !flip {
            return pred.clone();
        }
        let block = pos / BLOCK_LEN;
        let penalty = if path_touches_block(path, block) {
            let mut b = block_with_path(self.cover, path, block);
            b[pos % BLOCK_LEN] = new_value;
            block_cost(&b, &self.params.config)
        } else {
            // depends only on this change: shared by every clean predecessor
            *solo.get_or_insert_with(|| {
                let mut b = self.cover.block(block);
                b[pos % BLOCK_LEN] = new_value;
                block_cost(&b, &self.params.config)
            })
        };
        Slot {
            weight: pred.weight + rho + penalty,
            distortion: pred.distortion + rho,
            penalties: pred.penalties + (penalty > T::zero()) as usize,
            path: Some(Some(Rc::new(Delta {
                pos,
                value: new_value,
                prev: path.clone(),
            }))),
        }
    }

    fn step(&mut self, idx: usize, col: u32) {
        let pos = self.lattice[idx];
        let value = self.cover.get(pos);
        let x = cover_bit(value);
        let rho = self.cm.get(pos);
        let new_value = self.signs.changed_value(pos, value);
        let mut solo = None;
        let next: Vec<Slot<T>> = (0..self.slots.len())
            .map(|k| {
                // stego bit 0 comes from k, stego bit 1 from k ^ col
                let zero = self.candidate(k, x == 1, pos, new_value, if x == 1 { rho } else { T::zero() }, &mut solo);
                let one = self.candidate(k ^ col as usize, x == 0, pos, new_value, if x == 0 { rho } else { T::zero() }, &mut solo);
                let take_one = one.weight < zero.weight || (one.weight == zero.weight && x == 1);
                if take_one {
                    one
                } else {
                    zero
                }
            })
            .collect();
        self.slots = next;
    }

    fn prune(&mut self, bit: u8) {
        let half = self.slots.len() / 2;
        for j in 0..half {
            self.slots[j] = self.slots[2 * j + bit as usize].clone();
        }
        for s in self.slots[half..].iter_mut() {
            *s = Slot::unreachable();
        }
    }

    fn snapshot(&self) -> Vec<Option<TrellisState<T>>> {
        self.slots
            .iter()
            .map(|s| {
                s.path.as_ref().map(|p| TrellisState {
                    weight: s.weight,
                    changes: path_changes(p),
                })
            })
            .collect()
    }
}

type Observer<'o, T> = &'o mut dyn FnMut(usize, bool, &[Option<TrellisState<T>>]);

fn run<T: Scalar>(
    cover: &CoefficientImage,
    lattice: &[usize],
    cm: &CostMap<T>,
    msg: &[u8],
    params: &VrcstcParams<T>,
    mut observer: Option<Observer<'_, T>>,
) -> Result<VrcstcOutput<T>> {
    let w = params.hh.width();
    if lattice.len() < w * msg.len() {
        return Err(Error::InvalidArgument(format!(
            "lattice of {} positions cannot carry {} bits at width {w}",
            lattice.len(),
            msg.len()
        )));
    }
    if cm.width() != cover.width() || cm.height() != cover.height() {
        return Err(Error::DimensionMismatch("cost map does not match cover".into()));
    }
    if let Some(&p) = lattice.iter().find(|&&p| p >= cover.len()) {
        return Err(Error::InvalidArgument(format!("lattice position {p} outside the image")));
    }
    let mut trellis = Trellis::new(cover, lattice, cm, params);
    let columns = params.hh.columns().to_vec();
    for (i, &bit) in msg.iter().enumerate() {
        for (j, &col) in columns.iter().enumerate() {
            trellis.step(i * w + j, col);
            if let Some(obs) = observer.as_mut() {
                obs(i * w + j, false, &trellis.snapshot());
            }
        }
        trellis.prune(bit);
        if let Some(obs) = observer.as_mut() {
            obs(i * w + w - 1, true, &trellis.snapshot());
        }
    }

    let best = trellis
        .slots
        .iter()
        .enumerate()
        .filter(|(_, s)| s.path.is_some())
        .fold(None::<(usize, T)>, |acc, (i, s)| match acc {
            Some((_, bw)) if s.weight >= bw => acc,
            _ => Some((i, s.weight)),
        })
        .ok_or_else(|| Error::EmbedFailure("no reachable final state".into()))?;
    let slot = &trellis.slots[best.0];
    if slot.distortion >= cm.wet_cap() {
        return Err(Error::EmbedFailure("every path changes a wet coefficient".into()));
    }
    let changes = path_changes(slot.path.as_ref().expect("reachable"));
    let mut stego = cover.clone();
    for &(pos, value) in &changes {
        stego.set(pos, value);
    }
    Ok(VrcstcOutput {
        stego,
        weight: slot.weight,
        distortion: slot.distortion,
        penalties: slot.penalties,
        changes: changes.into_iter().map(|(p, _)| p).collect(),
    })
}

/// Embeds `msg` into the LSBs of `cover` at the `lattice` positions.
///
/// Uses the first `w * msg.len()` lattice positions, where `w` is the width
/// of `params.hh`.
pub fn vrcstc_embed<T: Scalar>(
    cover: &CoefficientImage,
    lattice: &[usize],
    cm: &CostMap<T>,
    msg: &[u8],
    params: &VrcstcParams<T>,
) -> Result<VrcstcOutput<T>> {
    run(cover, lattice, cm, msg, params, None)
}

/// Same as [`vrcstc_embed`], reporting every reachable state after each
/// column (`pruned == false`) and after each message-bit pruning
/// (`pruned == true`). Meant for inspecting small instances.
pub fn vrcstc_embed_traced<T: Scalar>(
    cover: &CoefficientImage,
    lattice: &[usize],
    cm: &CostMap<T>,
    msg: &[u8],
    params: &VrcstcParams<T>,
    mut observer: impl FnMut(usize, bool, &[Option<TrellisState<T>>]),
) -> Result<VrcstcOutput<T>> {
    run(cover, lattice, cm, msg, params, Some(&mut observer))
}

/// Passes `stego` through the channel once and reports what changed.
pub fn verify_stego(stego: &CoefficientImage, params: &ChannelParams) -> ChannelReport {
    let received = recompress_image(stego, params);
    diff_report(stego, &received).expect("recompression keeps dimensions")
}
