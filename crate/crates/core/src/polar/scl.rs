//! Successive cancellation list decoding with CRC path selection.
//!
//! Min-sum `f`, exact `g` and the hardware-friendly path metric
//! (`PM += |λ|` when the decision disagrees with the LLR sign). Every path
//! owns its LLR and partial-sum trees; forking copies the still-live parts
//! of the parent into a free slot. Ties are broken by lower slot index, so decoding
//! is fully deterministic.

use super::PolarCode;

pub struct SclDecoder {
    code: PolarCode,
    n: usize,
    list: usize,
    active: usize,
    /// Per path, `2n` LLRs: the node of size `s` lives at `[s, 2s)`.
    alpha: Vec<f32>,
    /// Per path, two partial-sum trees (`side` 0/1) of `2n` bits each.
    beta: Vec<u8>,
    /// Per path, decided `u` bits.
    u: Vec<u8>,
    pm: Vec<f32>,
    candidates: Vec<(f32, usize, u8)>,
    slot_of: Vec<[bool; 2]>,
}

#[inline]
fn f_minsum(a: f32, b: f32) -> f32 {
    let sign = (a.to_bits() ^ b.to_bits()) & 0x8000_0000;
    f32::from_bits(a.abs().min(b.abs()).to_bits() | sign)
}

#[inline]
fn g_combine(a: f32, b: f32, bit: u8) -> f32 {
    b + f32::from_bits(a.to_bits() ^ ((bit as u32) << 31))
}

#[inline]
fn penalty(llr: f32, bit: u8) -> f32 {
    match bit {
        0 if llr < 0.0 => -llr,
        1 if llr > 0.0 => llr,
        _ => 0.0,
    }
}

impl SclDecoder {
    pub fn new(code: &PolarCode, list_size: usize) -> Self {
        assert!(list_size > 0, "list size must be positive");
        let n = code.len();
        SclDecoder {
            code: code.clone(),
            n,
            list: list_size,
            active: 0,
            alpha: vec![0.0; list_size * 2 * n],
            beta: vec![0; list_size * 4 * n],
            u: vec![0; list_size * n],
            pm: vec![0.0; list_size],
            candidates: Vec::with_capacity(2 * list_size),
            slot_of: vec![[false; 2]; list_size],
        }
    }

    pub fn code(&self) -> &PolarCode {
        &self.code
    }

    pub fn list_size(&self) -> usize {
        self.list
    }

    /// Decodes channel LLRs (positive favours 0) and returns the payload of
    /// the most likely list path that satisfies the CRC, or `None`.
    ///
    /// An all-zero LLR vector carries no information and is reported as a
    /// failure without running the list search.
    pub fn decode(&mut self, llrs: &[f64]) -> Option<Vec<u8>> {
        assert_eq!(llrs.len(), self.n, "LLR length");
        if llrs.iter().all(|&l| l == 0.0) {
            return None;
        }
        let n = self.n;
        self.active = 1;
        self.pm[0] = 0.0;
        for (dst, &l) in self.alpha[n..2 * n].iter_mut().zip(llrs) {
            *dst = l as f32;
        }
        self.node(n, 0, 0);
        self.select()
    }

    fn select(&self) -> Option<Vec<u8>> {
        let n = self.n;
        let crc = self.code.crc();
        let mut best: Option<(f32, usize)> = None;
        let mut info = vec![0u8; self.code.k()];
        for p in 0..self.active {
            let u = &self.u[p * n..(p + 1) * n];
            for (dst, &pos) in info.iter_mut().zip(self.code.info_positions()) {
                *dst = u[pos];
            }
            if crc.check(&info) && best.is_none_or(|(m, _)| self.pm[p] < m) {
                best = Some((self.pm[p], p));
            }
        }
        best.map(|(_, p)| {
            let u = &self.u[p * n..(p + 1) * n];
            self.code.info_positions()[..self.code.payload_len()]
                .iter()
                .map(|&pos| u[pos])
                .collect()
        })
    }

    fn node(&mut self, size: usize, side: usize, base: usize) {
        if size == 1 {
            self.leaf(side, base);
            return;
        }
        let n = self.n;
        let half = size / 2;
        for p in 0..self.active {
            let a = &mut self.alpha[p * 2 * n..(p + 1) * 2 * n];
            let (lo, hi) = a.split_at_mut(size);
            let (h0, h1) = hi[..size].split_at(half);
            for ((o, &x), &y) in lo[half..].iter_mut().zip(h0).zip(h1) {
                *o = f_minsum(x, y);
            }
        }
        self.node(half, 0, base);
        for p in 0..self.active {
            let a = &mut self.alpha[p * 2 * n..(p + 1) * 2 * n];
            let left = &self.beta[p * 4 * n + half..p * 4 * n + size];
            let (lo, hi) = a.split_at_mut(size);
            let (h0, h1) = hi[..size].split_at(half);
            for (((o, &x), &y), &bit) in lo[half..].iter_mut().zip(h0).zip(h1).zip(left) {
                *o = g_combine(x, y, bit);
            }
        }
        self.node(half, 1, base + half);
        for p in 0..self.active {
            let b = &mut self.beta[p * 4 * n..(p + 1) * 4 * n];
            let (left_tree, right_tree) = b.split_at_mut(2 * n);
            let (src, out) = if side == 0 {
                (&*right_tree, &mut *left_tree)
            } else {
                (&*left_tree, &mut *right_tree)
            };
            let (own_lo, own_hi) = out.split_at_mut(size);
            let own = &own_lo[half..];
            let other = &src[half..size];
            // `own` and `other` hold the left and right child results in
            // some order; xor is symmetric, the copied half is the right one.
            let right = if side == 0 { other } else { own };
            for ((o, &x), &y) in own_hi[..half].iter_mut().zip(own).zip(other) {
                *o = x ^ y;
            }
            own_hi[half..size].copy_from_slice(right);
        }
    }

    fn set_bit(&mut self, p: usize, side: usize, phi: usize, bit: u8) {
        let n = self.n;
        let llr = self.alpha[p * 2 * n + 1];
        self.pm[p] += penalty(llr, bit);
        self.u[p * n + phi] = bit;
        self.beta[p * 4 * n + side * 2 * n + 1] = bit;
    }

    /// Copies the part of path `from` that is still read after deciding leaf
    /// `phi`: the LLRs of ancestors whose right child is pending, the partial
    /// sums of finished left children and the decided prefix of `u`.
    fn copy_path(&mut self, from: usize, to: usize, phi: usize) {
        let n = self.n;
        let (fa, ta) = (from * 2 * n, to * 2 * n);
        let (fb, tb) = (from * 4 * n, to * 4 * n);
        self.alpha[ta + 1] = self.alpha[fa + 1];
        let mut s = 1;
        while s < n {
            if phi & s == 0 {
                self.alpha.copy_within(fa + 2 * s..fa + 4 * s, ta + 2 * s);
            } else {
                self.beta.copy_within(fb + s..fb + 2 * s, tb + s);
            }
            s *= 2;
        }
        self.u.copy_within(from * n..from * n + phi, to * n);
        self.pm[to] = self.pm[from];
    }

    fn leaf(&mut self, side: usize, phi: usize) {
        if self.code.is_frozen(phi) {
            for p in 0..self.active {
                self.set_bit(p, side, phi, 0);
            }
            return;
        }
        let n = self.n;
        let active = self.active;
        if 2 * active <= self.list {
            for p in 0..active {
                self.copy_path(p, active + p, phi);
            }
            for p in 0..active {
                self.set_bit(p, side, phi, 0);
                self.set_bit(active + p, side, phi, 1);
            }
            self.active = 2 * active;
            return;
        }

        self.candidates.clear();
        for p in 0..active {
            let llr = self.alpha[p * 2 * n + 1];
            for bit in 0..2u8 {
                self.candidates.push((self.pm[p] + penalty(llr, bit), p, bit));
            }
        }
        let keep = self.list;
        self.candidates.select_nth_unstable_by(keep - 1, |a, b| {
            a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2))
        });
        for s in self.slot_of[..active].iter_mut() {
            *s = [false; 2];
        }
        for &(_, p, bit) in &self.candidates[..keep] {
            self.slot_of[p][bit as usize] = true;
        }

        let mut free: Vec<usize> = (0..active).filter(|&p| self.slot_of[p] == [false, false]).collect();
        free.reverse();
        let mut next_new = active;
        for p in 0..active {
            match self.slot_of[p] {
                [true, true] => {
                    let q = free.pop().unwrap_or_else(|| {
                        next_new += 1;
                        next_new - 1
                    });
                    self.copy_path(p, q, phi);
                    self.set_bit(p, side, phi, 0);
                    self.set_bit(q, side, phi, 1);
                }
                [true, false] => self.set_bit(p, side, phi, 0),
                [false, true] => self.set_bit(p, side, phi, 1),
                [false, false] => {}
            }
        }
        debug_assert!(free.is_empty());
        self.active = next_new;
    }
}
