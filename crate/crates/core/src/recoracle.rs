//! Toy recursive oracle `O[A] = (A, B)`: `A` is a seeded random oracle and
//! `B(⟨M, y⟩)` answers whether the straight-line machine `M` accepts `y` for
//! some witness, where `M` may itself query `A` and `B` on short strings.
//!
//! # Encoding
//!
//! A string `x` of length `ℓ` is read as `content ‖ 1 ‖ 0…0`: trailing zeros
//! and the last one bit are stripped. The content is a sequence of prefix-coded
//! tokens for a stack machine, terminated by `END`, followed by the bits of `y`.
//!
//! | code            | token | effect                                      |
//! |-----------------|-------|---------------------------------------------|
//! | `00`            | `W`   | push the next witness bit                   |
//! | `01`            | `Y`   | push the next bit of `y`                    |
//! | `100`           | `END` | stop; the single remaining bit is the output |
//! | `101`           | `NOT` | negate the top                              |
//! | `1100`          | `AND` | pop two, push conjunction                   |
//! | `1101`          | `OR`  | pop two, push disjunction                   |
//! | `11100`         | `XOR` | pop two, push parity                        |
//! | `11101`         | `DUP` | duplicate the top                           |
//! | `11110 aaaa`    | `QA`  | pop `a+1` bits, push `[A(s) = +1]`          |
//! | `11111 aaaa`    | `QB`  | pop `a+1` bits, push `[B(s) = +1]`          |
//!
//! A query string lists the popped bits in the order they were pushed. The
//! encoding is well formed when it decodes, the stack never underflows, exactly
//! one bit remains at `END`, `y` is long enough for every `Y`, at most eight
//! `W` tokens occur, and every query arity is at most `⌊√ℓ⌋`. Anything else is
//! malformed and has `B = −1`. Witness bit `i` feeds the `i`-th `W` token.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::RwLock;

use rand::{Rng, RngCore};
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::oracle::{BitString, RandomOracle};

/// Longest input accepted by `B`.
pub const MAX_B_LEN: usize = 256;
/// Most witness wires per machine.
pub const MAX_WITNESS: usize = 8;
/// Most bits popped by one query gate.
pub const MAX_ARITY: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Gate {
    Witness,
    Input,
    Not,
    And,
    Or,
    Xor,
    Dup,
    QueryA(u8),
    QueryB(u8),
}

impl Gate {
    fn code(self) -> (u32, usize) {
        match self {
            Gate::Witness => (0b00, 2),
            Gate::Input => (0b01, 2),
            Gate::Not => (0b101, 3),
            Gate::And => (0b1100, 4),
            Gate::Or => (0b1101, 4),
            Gate::Xor => (0b11100, 5),
            Gate::Dup => (0b11101, 5),
            Gate::QueryA(a) => ((0b11110 << 4) | u32::from(a - 1), 9),
            Gate::QueryB(a) => ((0b11111 << 4) | u32::from(a - 1), 9),
        }
    }

    /// (pops, pushes)
    fn stack_effect(self) -> (usize, usize) {
        match self {
            Gate::Witness | Gate::Input => (0, 1),
            Gate::Not => (1, 1),
            Gate::And | Gate::Or | Gate::Xor => (2, 1),
            Gate::Dup => (1, 2),
            Gate::QueryA(a) | Gate::QueryB(a) => (usize::from(a), 1),
        }
    }
}

const END: (u32, usize) = (0b100, 3);

/// A decoded machine and its input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MachineDesc {
    len: usize,
    gates: Vec<Gate>,
    y: Vec<bool>,
}

fn push_code(out: &mut Vec<bool>, (code, width): (u32, usize)) {
    out.extend((0..width).rev().map(|i| (code >> i) & 1 == 1));
}

/// `⌊√ℓ⌋`.
pub fn query_cap(len: usize) -> usize {
    let mut r = (len as f64).sqrt() as usize;
    while r * r > len {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= len {
        r += 1;
    }
    r
}

impl MachineDesc {
    /// Builds and validates a machine that will be encoded in `len` bits.
    pub fn new(len: usize, gates: Vec<Gate>, y: Vec<bool>) -> Result<Self> {
        if len > MAX_B_LEN {
            return Err(LabError::CapExceeded {
                what: format!("machine length {len}"),
                cap: MAX_B_LEN,
            });
        }
        let m = Self { len, gates, y };
        m.check().map_err(LabError::InvalidParameter)?;
        if m.content_bits() + 1 > len {
            return Err(LabError::InvalidParameter(format!(
                "encoding needs {} bits, budget {len}",
                m.content_bits() + 1
            )));
        }
        Ok(m)
    }

    fn check(&self) -> std::result::Result<(), String> {
        let cap = query_cap(self.len);
        let (mut depth, mut witnesses, mut inputs) = (0usize, 0usize, 0usize);
        for &g in &self.gates {
            match g {
                Gate::Witness => witnesses += 1,
                Gate::Input => inputs += 1,
                Gate::QueryA(a) | Gate::QueryB(a)
                    if a == 0 || usize::from(a) > cap.min(MAX_ARITY) =>
                {
                    return Err(format!("query arity {a} above {cap}"));
                }
                _ => {}
            }
            let (pop, push) = g.stack_effect();
            depth = depth.checked_sub(pop).ok_or("stack underflow")? + push;
        }
        if depth != 1 {
            return Err(format!("{depth} values left at END"));
        }
        if witnesses > MAX_WITNESS {
            return Err(format!("{witnesses} witness wires"));
        }
        if inputs > self.y.len() {
            return Err(format!("{inputs} input reads, |y| = {}", self.y.len()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn y(&self) -> &[bool] {
        &self.y
    }

    pub fn witness_count(&self) -> usize {
        self.gates.iter().filter(|&&g| g == Gate::Witness).count()
    }

    fn content_bits(&self) -> usize {
        self.gates.iter().map(|g| g.code().1).sum::<usize>() + END.1 + self.y.len()
    }

    /// The `ℓ`-bit string `⟨M, y⟩`.
    pub fn encode(&self) -> Vec<bool> {
        let mut out = Vec::with_capacity(self.len);
        for &g in &self.gates {
            push_code(&mut out, g.code());
        }
        push_code(&mut out, END);
        out.extend_from_slice(&self.y);
        out.push(true);
        out.resize(self.len, false);
        out
    }

    /// Parses `x`. `Ok(None)` means malformed.
    pub fn decode(x: &[bool]) -> Result<Option<Self>> {
        if x.len() > MAX_B_LEN {
            return Err(LabError::CapExceeded {
                what: format!("B input length {}", x.len()),
                cap: MAX_B_LEN,
            });
        }
        let Some(last) = x.iter().rposition(|&b| b) else {
            return Ok(None);
        };
        let content = &x[..last];
        let mut pos = 0;
        let mut take = |width: usize| -> Option<u32> {
            let bits = content.get(pos..pos + width)?;
            pos += width;
            Some(bits.iter().fold(0, |acc, &b| (acc << 1) | u32::from(b)))
        };
        let mut gates = Vec::new();
        loop {
            let gate = match take(2) {
                Some(0b00) => Gate::Witness,
                Some(0b01) => Gate::Input,
                Some(0b10) => match take(1) {
                    Some(0) => break,
                    Some(_) => Gate::Not,
                    None => return Ok(None),
                },
                Some(_) => match (take(1), take(1)) {
                    (Some(0), Some(0)) => Gate::And,
                    (Some(0), Some(_)) => Gate::Or,
                    (Some(_), Some(0)) => match take(1) {
                        Some(0) => Gate::Xor,
                        Some(_) => Gate::Dup,
                        None => return Ok(None),
                    },
                    (Some(_), Some(_)) => match (take(1), take(4)) {
                        (Some(0), Some(a)) => Gate::QueryA(a as u8 + 1),
                        (Some(_), Some(a)) => Gate::QueryB(a as u8 + 1),
                        _ => return Ok(None),
                    },
                    _ => return Ok(None),
                },
                None => return Ok(None),
            };
            gates.push(gate);
        }
        let m = Self {
            len: x.len(),
            gates,
            y: content[pos..].to_vec(),
        };
        Ok(m.check().is_ok().then_some(m))
    }

    /// Binary layout: `ℓ` as `u16` little endian, then the `ℓ` bits packed
    /// most significant first, zero padded to a byte.
    pub fn to_bytes(&self) -> Vec<u8> {
        encode_bits(&self.encode())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Option<Self>> {
        Self::decode(&decode_bits(bytes)?)
    }
}

/// Length-prefixed packing of a bit string.
pub fn encode_bits(bits: &[bool]) -> Vec<u8> {
    let mut out = (bits.len() as u16).to_le_bytes().to_vec();
    out.extend(bits.chunks(8).map(|c| {
        c.iter()
            .enumerate()
            .fold(0u8, |acc, (i, &b)| acc | (u8::from(b) << (7 - i)))
    }));
    out
}

pub fn decode_bits(bytes: &[u8]) -> Result<Vec<bool>> {
    let [a, b, body @ ..] = bytes else {
        return Err(LabError::Format("missing length prefix".into()));
    };
    let len = usize::from(u16::from_le_bytes([*a, *b]));
    if body.len() != len.div_ceil(8) {
        return Err(LabError::Format(format!(
            "{} payload bytes for {len} bits",
            body.len()
        )));
    }
    let bits: Vec<bool> = (0..len)
        .map(|i| (body[i / 8] >> (7 - i % 8)) & 1 == 1)
        .collect();
    if len % 8 != 0 && body[len / 8] & (0xff >> (len % 8)) != 0 {
        return Err(LabError::Format("nonzero padding".into()));
    }
    Ok(bits)
}

/// `max(1, ⌊log₂ log₂ ℓ⌋)`.
pub fn depth_bound(len: usize) -> usize {
    if len < 4 {
        return 1;
    }
    ((len as f64).log2().log2().floor() as usize).max(1)
}

/// Accept bit and chain height per evaluated string.
type Memo = HashMap<Vec<bool>, (bool, usize)>;

/// `A` plus a memo table for `B`.
#[derive(Debug)]
pub struct RecursiveOracle {
    a: RandomOracle,
    memo: Option<RwLock<Memo>>,
    max_depth: AtomicUsize,
}

impl RecursiveOracle {
    pub fn new(seed: u64) -> Self {
        Self {
            a: RandomOracle::new(seed),
            memo: Some(RwLock::new(HashMap::new())),
            max_depth: AtomicUsize::new(0),
        }
    }

    /// Same oracle, recomputing every `B` value.
    pub fn without_memo(seed: u64) -> Self {
        Self {
            memo: None,
            ..Self::new(seed)
        }
    }

    pub fn seed(&self) -> u64 {
        self.a.seed()
    }

    pub fn memo_len(&self) -> usize {
        self.memo
            .as_ref()
            .map_or(0, |m| m.read().expect("memo lock").len())
    }

    /// Deepest chain of well-formed `B` evaluations seen so far.
    pub fn max_depth(&self) -> usize {
        self.max_depth.load(Ordering::Relaxed)
    }

    pub fn eval_a(&self, x: &[bool]) -> Result<i8> {
        Ok(self.a.eval(BitString::from_bits(x)?))
    }

    pub fn eval_b(&self, x: &[bool]) -> Result<i8> {
        Ok(self.eval_b_traced(x)?.0)
    }

    /// `B(x)` together with the length of the longest chain of well-formed
    /// evaluations it triggered (0 for malformed `x`).
    pub fn eval_b_traced(&self, x: &[bool]) -> Result<(i8, usize)> {
        let (accept, height) = self.accepts(x, 1, depth_bound(x.len()))?;
        Ok((if accept { 1 } else { -1 }, height))
    }

    fn accepts(&self, x: &[bool], depth: usize, bound: usize) -> Result<(bool, usize)> {
        if let Some(memo) = &self.memo {
            if let Some(&hit) = memo.read().expect("memo lock").get(x) {
                return Ok(hit);
            }
        }
        let Some(machine) = MachineDesc::decode(x)? else {
            return Ok((false, 0));
        };
        assert!(
            depth <= bound,
            "B recursion depth {depth} exceeds bound {bound}"
        );
        let (accept, below) = self.sliced_search(&machine, depth, bound)?;
        let result = (accept, below + 1);
        self.max_depth.fetch_max(result.1, Ordering::Relaxed);
        if let Some(memo) = &self.memo {
            memo.write()
                .expect("memo lock")
                .entry(x.to_vec())
                .or_insert(result);
        }
        Ok(result)
    }

    /// Runs `M` on all `2^w` witnesses at once, one mask bit per witness.
    fn sliced_search(&self, m: &MachineDesc, depth: usize, bound: usize) -> Result<(bool, usize)> {
        let lanes = 1usize << m.witness_count();
        let words = lanes.div_ceil(64);
        let full = |w: usize| {
            if w + 1 == words && !lanes.is_multiple_of(64) {
                (1u64 << lanes) - 1
            } else {
                u64::MAX
            }
        };
        let splat = |b: bool| {
            (0..words)
                .map(|w| if b { full(w) } else { 0 })
                .collect::<Vec<u64>>()
        };
        let mut stack: Vec<Vec<u64>> = Vec::new();
        let (mut wires, mut reads, mut height) = (0usize, 0usize, 0usize);
        for &g in &m.gates {
            match g {
                Gate::Witness => {
                    let mask = (0..words)
                        .map(|w| {
                            (0..64.min(lanes)).fold(0u64, |acc, j| {
                                acc | ((((w * 64 + j) >> wires) & 1) as u64) << j
                            })
                        })
                        .collect();
                    wires += 1;
                    stack.push(mask);
                }
                Gate::Input => {
                    stack.push(splat(m.y[reads]));
                    reads += 1;
                }
                Gate::Not => {
                    let top = stack.last_mut().expect("checked");
                    for (w, v) in top.iter_mut().enumerate() {
                        *v = !*v & full(w);
                    }
                }
                Gate::And | Gate::Or | Gate::Xor => {
                    let b = stack.pop().expect("checked");
                    let a = stack.last_mut().expect("checked");
                    for (x, y) in a.iter_mut().zip(b) {
                        *x = match g {
                            Gate::And => *x & y,
                            Gate::Or => *x | y,
                            _ => *x ^ y,
                        };
                    }
                }
                Gate::Dup => stack.push(stack.last().expect("checked").clone()),
                Gate::QueryA(a) | Gate::QueryB(a) => {
                    let args = stack.split_off(stack.len() - usize::from(a));
                    let mut seen: HashMap<Vec<bool>, bool> = HashMap::new();
                    let mut out = vec![0u64; words];
                    for lane in 0..lanes {
                        let s: Vec<bool> = args
                            .iter()
                            .map(|v| (v[lane / 64] >> (lane % 64)) & 1 == 1)
                            .collect();
                        let bit = match seen.get(&s) {
                            Some(&b) => b,
                            None => {
                                let b = match g {
                                    Gate::QueryA(_) => self.eval_a(&s)? == 1,
                                    _ => {
                                        let (b, h) = self.accepts(&s, depth + 1, bound)?;
                                        height = height.max(h);
                                        b
                                    }
                                };
                                seen.insert(s, b);
                                b
                            }
                        };
                        out[lane / 64] |= u64::from(bit) << (lane % 64);
                    }
                    stack.push(out);
                }
            }
        }
        Ok((
            stack.pop().expect("checked").iter().any(|&w| w != 0),
            height,
        ))
    }
}

/// Runs `M` on one witness (bit `i` feeds the `i`-th `W`), resolving `B`
/// queries through [`brute_force_b`].
pub fn run_machine(oracle: &RecursiveOracle, m: &MachineDesc, witness: u32) -> Result<bool> {
    let mut stack: Vec<bool> = Vec::new();
    let (mut wires, mut reads) = (0, 0);
    for &g in m.gates() {
        let v = match g {
            Gate::Witness => {
                wires += 1;
                (witness >> (wires - 1)) & 1 == 1
            }
            Gate::Input => {
                reads += 1;
                m.y()[reads - 1]
            }
            Gate::Not => !stack.pop().expect("checked"),
            Gate::Dup => *stack.last().expect("checked"),
            Gate::And | Gate::Or | Gate::Xor => {
                let (b, a) = (stack.pop().expect("checked"), stack.pop().expect("checked"));
                match g {
                    Gate::And => a && b,
                    Gate::Or => a || b,
                    _ => a ^ b,
                }
            }
            Gate::QueryA(k) | Gate::QueryB(k) => {
                let s = stack.split_off(stack.len() - usize::from(k));
                match g {
                    Gate::QueryA(_) => oracle.eval_a(&s)? == 1,
                    _ => brute_force_b(oracle, &s)? == 1,
                }
            }
        };
        stack.push(v);
    }
    Ok(stack.pop().expect("checked"))
}

/// Existential evaluation by trying every witness, without the memo table.
pub fn brute_force_b(oracle: &RecursiveOracle, x: &[bool]) -> Result<i8> {
    let Some(m) = MachineDesc::decode(x)? else {
        return Ok(-1);
    };
    for w in 0..1u32 << m.witness_count() {
        if run_machine(oracle, &m, w)? {
            return Ok(1);
        }
    }
    Ok(-1)
}

/// Random well-formed machine encoded in exactly `len` bits.
pub fn random_machine<R: RngCore + ?Sized>(len: usize, rng: &mut R) -> Result<MachineDesc> {
    if len < 6 {
        return Err(LabError::InvalidParameter(format!(
            "no well-formed machine fits in {len} bits"
        )));
    }
    let cap = query_cap(len).min(MAX_ARITY);
    loop {
        let witnesses = rng.random_range(0..=3.min(MAX_WITNESS));
        let mut gates = Vec::new();
        let (mut depth, mut w, mut inputs) = (0usize, 0usize, 0usize);
        for _ in 0..rng.random_range(1..=len / 4) {
            let g = match rng.random_range(0..8) {
                0 if w < witnesses => Gate::Witness,
                0 | 1 => Gate::Input,
                2 if depth >= 1 => Gate::Not,
                3 if depth >= 2 => Gate::And,
                4 if depth >= 2 => [Gate::Or, Gate::Xor][rng.random_range(0..2)],
                5 if depth >= 1 => Gate::Dup,
                6 | 7 if depth >= 1 => {
                    let a = rng.random_range(1..=depth.min(cap)) as u8;
                    if rng.random_bool(0.3) {
                        Gate::QueryB(a)
                    } else {
                        Gate::QueryA(a)
                    }
                }
                _ => Gate::Witness,
            };
            if g == Gate::Witness {
                if w == witnesses {
                    continue;
                }
                w += 1;
            }
            inputs += usize::from(g == Gate::Input);
            let (pop, push) = g.stack_effect();
            depth = depth - pop + push;
            gates.push(g);
        }
        if depth == 0 {
            gates.push(Gate::Input);
            inputs += 1;
            depth = 1;
        }
        while depth > 1 {
            gates.push([Gate::And, Gate::Or, Gate::Xor][rng.random_range(0..3)]);
            depth -= 1;
        }
        let extra = rng.random_range(0..=2);
        let y: Vec<bool> = (0..inputs + extra).map(|_| rng.random()).collect();
        if let Ok(m) = MachineDesc::new(len, gates, y) {
            return Ok(m);
        }
    }
}

/// `⟨M, y⟩` with `M` reading its first `|y| − 1` inner bits from `y` and the
/// final inner bit from a witness, then querying `B` on the 16-bit result.
/// With inner content `Y QA1 END`, witness 0 yields a malformed inner string
/// and witness 1 yields `⟨Y QA1, "1"⟩`, so `B` equals `A("1")`.
pub fn nested_witness_case() -> Vec<bool> {
    let mut prefix = Vec::new();
    for g in [Gate::Input, Gate::QueryA(1)] {
        push_code(&mut prefix, g.code());
    }
    push_code(&mut prefix, END);
    prefix.push(true);
    // prefix has 15 bits; the 16th comes from the witness.
    let mut gates = vec![Gate::Input; prefix.len()];
    gates.push(Gate::Witness);
    gates.push(Gate::QueryB(16));
    MachineDesc::new(MAX_B_LEN, gates, prefix)
        .expect("fits")
        .encode()
}

/// `⟨M, s⟩` where `M` pushes all sixteen bits of `s` and queries `B(s)`.
pub fn nested_forwarding_case(inner: &MachineDesc) -> Result<Vec<bool>> {
    if inner.len() != 16 {
        return Err(LabError::InvalidParameter(
            "inner machine must be 16 bits".into(),
        ));
    }
    let mut gates = vec![Gate::Input; 16];
    gates.push(Gate::QueryB(16));
    Ok(MachineDesc::new(MAX_B_LEN, gates, inner.encode())?.encode())
}

/// Agreement between single-query `B` decisions and brute-force search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemoReport {
    pub seed: u64,
    pub strings: usize,
    pub machines: usize,
    pub agreements: usize,
    pub agreement_rate: f64,
    pub accepted: usize,
    pub max_depth: usize,
    pub depth_bound_holds: bool,
    pub nested_cases: usize,
    pub passed: bool,
}

/// Evaluates every string with one `B` query and with brute force.
pub fn demo_p_equals_np(oracle: &RecursiveOracle, strings: &[Vec<bool>]) -> Result<DemoReport> {
    let (mut machines, mut agreements, mut accepted, mut nested, mut max_depth, mut bound_ok) =
        (0, 0, 0, 0, 0, true);
    for x in strings {
        machines += usize::from(MachineDesc::decode(x)?.is_some());
        let (single, height) = oracle.eval_b_traced(x)?;
        nested += usize::from(height >= 2);
        max_depth = max_depth.max(height);
        bound_ok &= height <= depth_bound(x.len());
        accepted += usize::from(single == 1);
        agreements += usize::from(single == brute_force_b(oracle, x)?);
    }
    let agreement_rate = if strings.is_empty() {
        1.0
    } else {
        agreements as f64 / strings.len() as f64
    };
    Ok(DemoReport {
        seed: oracle.seed(),
        strings: strings.len(),
        machines,
        agreements,
        agreement_rate,
        accepted,
        max_depth,
        depth_bound_holds: bound_ok,
        nested_cases: nested,
        passed: agreements == strings.len() && bound_ok,
    })
}

/// All 4096 strings of length 12, 50 random machines at each of `ℓ = 12`
/// and `ℓ = 64`, and the two depth-2 nested cases.
pub fn standard_enumeration<R: RngCore + ?Sized>(rng: &mut R) -> Result<Vec<Vec<bool>>> {
    let mut out: Vec<Vec<bool>> = (0..1u32 << 12)
        .map(|v| (0..12).rev().map(|i| (v >> i) & 1 == 1).collect())
        .collect();
    for len in [12, 64] {
        for _ in 0..50 {
            out.push(random_machine(len, rng)?.encode());
        }
    }
    out.push(nested_witness_case());
    let inner = MachineDesc::new(16, vec![Gate::Input, Gate::QueryA(1)], vec![true])?;
    out.push(nested_forwarding_case(&inner)?);
    Ok(out)
}
