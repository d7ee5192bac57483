//! Linear erasure codes over GF(q): scalar MDS encoders (parity, doubly
//! extended Reed-Solomon) and general array-code encoders mapping b x (M-r)
//! message blocks to b x M encoded blocks.
//!
//! A code is given by its generator matrix acting on flattened blocks. The
//! encoded coordinate (i, j) for row i in `[b]` and container j in `[M]` flattens
//! to index (j-1)*b + (i-1); message blocks flatten the same way. Rows and
//! containers are 1-based in the public API, matching the reports produced by
//! the analysis layer.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{Fe, FieldError, FieldMatrix, FieldSpec, FiniteField};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodeError {
    #[error("need at least 2 containers, got {0}")]
    TooFewContainers(u32),
    #[error("redundancy r={r} must satisfy 1 <= r < M={m}")]
    InvalidRedundancy { m: u32, r: u32 },
    #[error("block height b must be at least 1")]
    InvalidBlockRows,
    #[error("field of order {q} is too small; this construction needs q >= {needed}")]
    FieldTooSmall { q: u32, needed: u32 },
    #[error("generator must be {rows}x{cols}, got {got_rows}x{got_cols}")]
    GeneratorShape {
        rows: usize,
        cols: usize,
        got_rows: usize,
        got_cols: usize,
    },
    #[error("generator does not have full row rank; encoder would not be injective")]
    RankDeficientGenerator,
    #[error("block height {b} does not divide strand count {n}")]
    BlockMismatch { b: u32, n: u32 },
    #[error("message must be {rows}x{cols}, got {got_rows}x{got_cols}")]
    MessageShape {
        rows: usize,
        cols: usize,
        got_rows: usize,
        got_cols: usize,
    },
    #[error("position (row {row}, container {container}) out of range for b={b}, M={m}")]
    PositionOutOfRange { row: u32, container: u32, b: u32, m: u32 },
    #[error("container index {p} out of range 1..={m}")]
    ContainerOutOfRange { p: u32, m: u32 },
    #[error("observed symbols are not consistent with any codeword")]
    InconsistentObservations,
    #[error("{0} is not a prime power")]
    NotPrimePower(u64),
    #[error("MDS check over {subsets} container subsets exceeds the exhaustive budget")]
    CheckTooLarge { subsets: u64 },
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// A linear array code: injective encoder from b x (M-r) blocks to b x M
/// blocks, generator acting on flattened blocks. Scalar codes are the b = 1
/// case.
#[derive(Debug, Clone)]
pub struct ArrayCodeSpec {
    name: String,
    field: Arc<FiniteField>,
    containers: u32,
    redundancy: u32,
    block_rows: u32,
    generator: FieldMatrix,
}

/// One observed symbol of an encoded block: 1-based row within the block and
/// 1-based container index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Observation {
    pub row: u32,
    pub container: u32,
    pub value: Fe,
}

/// Result of attempting to reconstruct a column from partial observations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecodeOutcome {
    /// The unique p-th column (b symbols, top to bottom).
    Recovered(Vec<Fe>),
    /// The observed index set lies in the bad-blocks family: at least two
    /// codewords agree on it but differ in the target column.
    Unrecoverable,
}

/// Code description as stored in code-spec JSON files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CodeSpecFile {
    pub name: String,
    pub field: FieldSpec,
    #[serde(rename = "M")]
    pub containers: u32,
    pub r: u32,
    pub b: u32,
    /// Row-major generator, b*(M-r) rows of b*M entries each.
    pub generator: Vec<Vec<u64>>,
}

impl ArrayCodeSpec {
    pub fn from_parts(
        name: impl Into<String>,
        field: Arc<FiniteField>,
        containers: u32,
        redundancy: u32,
        block_rows: u32,
        generator: FieldMatrix,
    ) -> Result<ArrayCodeSpec, CodeError> {
        if containers < 2 {
            return Err(CodeError::TooFewContainers(containers));
        }
        if redundancy < 1 || redundancy >= containers {
            return Err(CodeError::InvalidRedundancy {
                m: containers,
                r: redundancy,
            });
        }
        if block_rows < 1 {
            return Err(CodeError::InvalidBlockRows);
        }
        let rows = (block_rows * (containers - redundancy)) as usize;
        let cols = (block_rows * containers) as usize;
        if generator.rows() != rows || generator.cols() != cols {
            return Err(CodeError::GeneratorShape {
                rows,
                cols,
                got_rows: generator.rows(),
                got_cols: generator.cols(),
            });
        }
        if field.rank(&generator) != rows {
            return Err(CodeError::RankDeficientGenerator);
        }
        Ok(ArrayCodeSpec {
            name: name.into(),
            field,
            containers,
            redundancy,
            block_rows,
            generator,
        })
    }

    /// Single parity container: coordinate M is the sum of coordinates 1..M-1.
    pub fn parity(containers: u32, field: Arc<FiniteField>) -> Result<ArrayCodeSpec, CodeError> {
        if containers < 2 {
            return Err(CodeError::TooFewContainers(containers));
        }
        let k = (containers - 1) as usize;
        let mut g = FieldMatrix::zero(k, containers as usize);
        for i in 0..k {
            g.set(i, i, Fe::ONE);
            g.set(i, containers as usize - 1, Fe::ONE);
        }
        let name = format!("parity:{},{}", containers, field.order());
        ArrayCodeSpec::from_parts(name, field, containers, 1, 1, g)
    }

    /// Doubly extended Reed-Solomon code: coordinates are evaluations of the
    /// degree-<(M-r) message polynomial at 0, 1, alpha, alpha^2, ... (alpha the
    /// field's fixed primitive element) plus the leading coefficient as the
    /// final coordinate. Any M-r coordinates determine the message.
    pub fn rs_doubly_extended(
        containers: u32,
        redundancy: u32,
        field: Arc<FiniteField>,
    ) -> Result<ArrayCodeSpec, CodeError> {
        if containers < 2 {
            return Err(CodeError::TooFewContainers(containers));
        }
        if redundancy < 1 || redundancy >= containers {
            return Err(CodeError::InvalidRedundancy {
                m: containers,
                r: redundancy,
            });
        }
        if field.order() < containers - 1 {
            return Err(CodeError::FieldTooSmall {
                q: field.order(),
                needed: containers - 1,
            });
        }
        let k = (containers - redundancy) as usize;
        let alpha = field.primitive_element();
        let mut g = FieldMatrix::zero(k, containers as usize);
        let mut point = Fe::ZERO;
        for j in 0..(containers as usize - 1) {
            let mut power = Fe::ONE;
            for i in 0..k {
                g.set(i, j, power);
                power = field.mul(power, point);
            }
            // next evaluation point: 0, 1, alpha, alpha^2, ...
            point = if point.is_zero() {
                Fe::ONE
            } else {
                field.mul(point, alpha)
            };
        }
        g.set(k - 1, containers as usize - 1, Fe::ONE);
        let name = format!("rs:{},{},{}", containers, redundancy, field.order());
        ArrayCodeSpec::from_parts(name, field, containers, redundancy, 1, g)
    }

    /// The regenerating array-code example over GF(3): b = 2, M = 4, r = 2,
    /// block map ((a, b), (c, d)) -> ((a, b, a+b, a+2d), (c, d, c+d, c+b)).
    pub fn f3_regen_example() -> ArrayCodeSpec {
        let field = Arc::new(FiniteField::new(3, 1, None).expect("GF(3)"));
        // message flattens to (a, c, b, d); encoded block flattens to
        // (a, c, b, d, a+b, c+d, a+2d, c+b)
        let rows: [[u16; 8]; 4] = [
            [1, 0, 0, 0, 1, 0, 1, 0], // a
            [0, 1, 0, 0, 0, 1, 0, 1], // c
            [0, 0, 1, 0, 1, 0, 0, 1], // b
            [0, 0, 0, 1, 0, 1, 2, 0], // d
        ];
        let data = rows.iter().flatten().map(|&v| Fe(v)).collect();
        let g = FieldMatrix::new(4, 8, data).expect("static dimensions");
        ArrayCodeSpec::from_parts("f3-regen-example", field, 4, 2, 2, g)
            .expect("the example generator has full row rank")
    }

    /// Recognize built-in code tokens: "parity:M,q", "rs:M,r,q",
    /// "f3-regen-example". Returns `None` for anything else.
    pub fn parse_token(token: &str) -> Option<Result<ArrayCodeSpec, CodeError>> {
        if token == "f3-regen-example" {
            return Some(Ok(ArrayCodeSpec::f3_regen_example()));
        }
        let (kind, rest) = token.split_once(':')?;
        let nums: Vec<u64> = match rest.split(',').map(|s| s.trim().parse()).collect() {
            Ok(v) => v,
            Err(_) => return None,
        };
        match (kind, nums.as_slice()) {
            ("parity", [m, q]) => Some(
                field_of_order(*q).and_then(|f| ArrayCodeSpec::parity(*m as u32, Arc::new(f))),
            ),
            ("rs", [m, r, q]) => Some(field_of_order(*q).and_then(|f| {
                ArrayCodeSpec::rs_doubly_extended(*m as u32, *r as u32, Arc::new(f))
            })),
            _ => None,
        }
    }

    pub fn from_file_spec(spec: &CodeSpecFile) -> Result<ArrayCodeSpec, CodeError> {
        let field = Arc::new(FiniteField::from_spec(&spec.field)?);
        let rows = spec.generator.len();
        let cols = spec.generator.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows * cols);
        for row in &spec.generator {
            if row.len() != cols {
                return Err(CodeError::GeneratorShape {
                    rows: (spec.b * (spec.containers - spec.r)) as usize,
                    cols: (spec.b * spec.containers) as usize,
                    got_rows: rows,
                    got_cols: row.len(),
                });
            }
            for &v in row {
                data.push(field.element(v)?);
            }
        }
        let generator = FieldMatrix::new(rows, cols, data)?;
        ArrayCodeSpec::from_parts(
            spec.name.clone(),
            field,
            spec.containers,
            spec.r,
            spec.b,
            generator,
        )
    }

    pub fn to_file_spec(&self) -> CodeSpecFile {
        let generator = (0..self.generator.rows())
            .map(|r| self.generator.row(r).iter().map(|fe| u64::from(fe.0)).collect())
            .collect();
        CodeSpecFile {
            name: self.name.clone(),
            field: self.field.spec(),
            containers: self.containers,
            r: self.redundancy,
            b: self.block_rows,
            generator,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn field(&self) -> &FiniteField {
        &self.field
    }

    pub fn field_arc(&self) -> Arc<FiniteField> {
        Arc::clone(&self.field)
    }

    /// M, the number of containers.
    pub fn containers(&self) -> u32 {
        self.containers
    }

    /// r, the redundancy.
    pub fn redundancy(&self) -> u32 {
        self.redundancy
    }

    /// b, the block height; 1 for scalar codes.
    pub fn block_rows(&self) -> u32 {
        self.block_rows
    }

    pub fn generator(&self) -> &FieldMatrix {
        &self.generator
    }

    /// Flattened message length b*(M-r).
    pub fn message_len(&self) -> usize {
        (self.block_rows * (self.containers - self.redundancy)) as usize
    }

    /// Flattened encoded length b*M.
    pub fn encoded_len(&self) -> usize {
        (self.block_rows * self.containers) as usize
    }

    /// Flattened index of 1-based (row, container).
    pub fn coord(&self, row: u32, container: u32) -> Result<usize, CodeError> {
        if row < 1 || row > self.block_rows || container < 1 || container > self.containers {
            return Err(CodeError::PositionOutOfRange {
                row,
                container,
                b: self.block_rows,
                m: self.containers,
            });
        }
        Ok(((container - 1) * self.block_rows + (row - 1)) as usize)
    }

    /// Encode one flattened message block.
    pub fn encode_block(&self, message: &[Fe]) -> Vec<Fe> {
        assert_eq!(message.len(), self.message_len(), "flattened block length");
        self.field.row_times_matrix(message, &self.generator)
    }

    /// Encode an n x (M-r) message matrix block by block into an n x M state.
    pub fn encode_state(&self, message: &FieldMatrix) -> Result<EncodedState, CodeError> {
        let n = message.rows() as u32;
        let data_cols = (self.containers - self.redundancy) as usize;
        if message.cols() != data_cols {
            return Err(CodeError::MessageShape {
                rows: n as usize,
                cols: data_cols,
                got_rows: message.rows(),
                got_cols: message.cols(),
            });
        }
        let b = self.block_rows;
        if n == 0 || n % b != 0 {
            return Err(CodeError::BlockMismatch { b, n });
        }
        let mut state = FieldMatrix::zero(n as usize, self.containers as usize);
        let mut flat = vec![Fe::ZERO; self.message_len()];
        for block in 0..(n / b) as usize {
            for j in 0..data_cols {
                for i in 0..b as usize {
                    flat[j * b as usize + i] = message.get(block * b as usize + i, j);
                }
            }
            let encoded = self.encode_block(&flat);
            for j in 0..self.containers as usize {
                for i in 0..b as usize {
                    state.set(block * b as usize + i, j, encoded[j * b as usize + i]);
                }
            }
        }
        Ok(EncodedState { symbols: state })
    }

    /// Reconstruct the p-th column of a single encoded block from observed
    /// symbols, or report that the observed index set cannot determine it.
    pub fn erasure_decode(
        &self,
        observed: &[Observation],
        p: u32,
    ) -> Result<DecodeOutcome, CodeError> {
        if p < 1 || p > self.containers {
            return Err(CodeError::ContainerOutOfRange {
                p,
                m: self.containers,
            });
        }
        let k = self.message_len();
        let mut rows = Vec::with_capacity(observed.len() * k);
        let mut rhs = Vec::with_capacity(observed.len());
        for obs in observed {
            let c = self.coord(obs.row, obs.container)?;
            for t in 0..k {
                rows.push(self.generator.get(t, c));
            }
            rhs.push(obs.value);
        }
        let a = FieldMatrix::new(observed.len(), k, rows)?;
        let Some((particular, kernel)) = self.field.solve(&a, &rhs) else {
            return Err(CodeError::InconsistentObservations);
        };
        let p_coords: Vec<usize> = (1..=self.block_rows)
            .map(|i| ((p - 1) * self.block_rows + (i - 1)) as usize)
            .collect();
        for v in &kernel {
            for &c in &p_coords {
                let mut acc = Fe::ZERO;
                for t in 0..k {
                    acc = self.field.add(acc, self.field.mul(v[t], self.generator.get(t, c)));
                }
                if !acc.is_zero() {
                    return Ok(DecodeOutcome::Unrecoverable);
                }
            }
        }
        let column = p_coords
            .iter()
            .map(|&c| {
                let mut acc = Fe::ZERO;
                for t in 0..k {
                    acc = self
                        .field
                        .add(acc, self.field.mul(particular[t], self.generator.get(t, c)));
                }
                acc
            })
            .collect();
        Ok(DecodeOutcome::Recovered(column))
    }

    /// Exhaustive MDS check: every set of M-r containers must determine the
    /// message, i.e. the generator restricted to those column groups has full
    /// rank b*(M-r).
    pub fn check_mds(&self) -> Result<bool, CodeError> {
        let m = self.containers;
        let k = (self.containers - self.redundancy) as usize;
        let subsets = binomial(u64::from(m), k as u64);
        if subsets > 2_000_000 {
            return Err(CodeError::CheckTooLarge { subsets });
        }
        let b = self.block_rows as usize;
        let krows = self.message_len();
        let mut chosen: Vec<u32> = (0..k as u32).collect();
        loop {
            let mut data = Vec::with_capacity(krows * k * b);
            for t in 0..krows {
                for &j in &chosen {
                    for i in 0..b {
                        data.push(self.generator.get(t, j as usize * b + i));
                    }
                }
            }
            let sub = FieldMatrix::new(krows, k * b, data)?;
            if self.field.rank(&sub) != krows {
                return Ok(false);
            }
            // next k-combination of 0..m in lexicographic order
            let mut idx = k;
            loop {
                if idx == 0 {
                    return Ok(true);
                }
                idx -= 1;
                if chosen[idx] < m - (k - idx) as u32 {
                    chosen[idx] += 1;
                    for t in idx + 1..k {
                        chosen[t] = chosen[t - 1] + 1;
                    }
                    break;
                }
            }
        }
    }
}

fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc = 1u64;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// Factor q as p^e and build GF(q) with the default modulus.
pub fn field_of_order(q: u64) -> Result<FiniteField, CodeError> {
    if q < 2 {
        return Err(CodeError::NotPrimePower(q));
    }
    let mut p = 2u64;
    while p * p <= q {
        if q % p == 0 {
            break;
        }
        p += 1;
    }
    let p = if q % p == 0 { p } else { q };
    let mut e = 0u32;
    let mut rest = q;
    while rest % p == 0 {
        rest /= p;
        e += 1;
    }
    if rest != 1 {
        return Err(CodeError::NotPrimePower(q));
    }
    Ok(FiniteField::new(p, e, None)?)
}

/// The n x M symbol matrix produced by encoding a message matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedState {
    symbols: FieldMatrix,
}

impl EncodedState {
    pub fn strands(&self) -> usize {
        self.symbols.rows()
    }

    pub fn containers(&self) -> usize {
        self.symbols.cols()
    }

    pub fn symbols(&self) -> &FieldMatrix {
        &self.symbols
    }

    /// Symbol at 0-based (strand row, container column).
    pub fn get(&self, row: usize, container: usize) -> Fe {
        self.symbols.get(row, container)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gf(q: u64) -> Arc<FiniteField> {
        Arc::new(field_of_order(q).unwrap())
    }

    fn fes(vals: &[u16]) -> Vec<Fe> {
        vals.iter().map(|&v| Fe(v)).collect()
    }

    #[test]
    fn parity_gf2_xor() {
        let code = ArrayCodeSpec::parity(3, gf(2)).unwrap();
        assert_eq!(code.encode_block(&fes(&[1, 1])), fes(&[1, 1, 0]));
    }

    #[test]
    fn parity_gf3_sum() {
        let code = ArrayCodeSpec::parity(4, gf(3)).unwrap();
        assert_eq!(code.encode_block(&fes(&[1, 2, 2])), fes(&[1, 2, 2, 2]));
    }

    #[test]
    fn parity_needs_two_containers() {
        assert_eq!(
            ArrayCodeSpec::parity(1, gf(2)).unwrap_err(),
            CodeError::TooFewContainers(1)
        );
    }

    #[test]
    fn rs_repetition_case() {
        // M=3, r=2 over GF(2): one message symbol, any coordinate recovers it
        let code = ArrayCodeSpec::rs_doubly_extended(3, 2, gf(2)).unwrap();
        assert_eq!(code.encode_block(&fes(&[1])), fes(&[1, 1, 1]));
    }

    #[test]
    fn rs_4_2_3_every_pair_determines_message() {
        let code = ArrayCodeSpec::rs_doubly_extended(4, 2, gf(3)).unwrap();
        assert!(code.check_mds().unwrap());
        // exhaustive: restriction of the 9 codewords to every coordinate pair
        // stays injective
        let mut codewords = Vec::new();
        for a in 0..3u16 {
            for b in 0..3u16 {
                codewords.push(code.encode_block(&[Fe(a), Fe(b)]));
            }
        }
        for c1 in 0..4 {
            for c2 in (c1 + 1)..4 {
                let mut seen = std::collections::HashSet::new();
                for cw in &codewords {
                    assert!(seen.insert((cw[c1], cw[c2])), "pair ({c1},{c2}) collides");
                }
            }
        }
    }

    #[test]
    fn rs_field_too_small() {
        assert_eq!(
            ArrayCodeSpec::rs_doubly_extended(5, 2, gf(3)).unwrap_err(),
            CodeError::FieldTooSmall { q: 3, needed: 4 }
        );
    }

    #[test]
    fn f3_example_map() {
        let code = ArrayCodeSpec::f3_regen_example();
        // (a,b,c,d) = (1,0,0,0): rows (1,0,1,1), (0,0,0,0)
        let msg = FieldMatrix::new(2, 2, fes(&[1, 0, 0, 0])).unwrap();
        let st = code.encode_state(&msg).unwrap();
        assert_eq!(st.symbols().row(0), &fes(&[1, 0, 1, 1])[..]);
        assert_eq!(st.symbols().row(1), &fes(&[0, 0, 0, 0])[..]);
        // (0,0,0,1): rows (0,0,0,2), (0,1,1,0)
        let msg = FieldMatrix::new(2, 2, fes(&[0, 0, 0, 1])).unwrap();
        let st = code.encode_state(&msg).unwrap();
        assert_eq!(st.symbols().row(0), &fes(&[0, 0, 0, 2])[..]);
        assert_eq!(st.symbols().row(1), &fes(&[0, 1, 1, 0])[..]);
        // zero in, zero out
        let msg = FieldMatrix::zero(2, 2);
        let st = code.encode_state(&msg).unwrap();
        assert!(st.symbols().data().iter().all(|s| s.is_zero()));
    }

    #[test]
    fn encode_state_block_example() {
        // message block ((1,2),(0,1)): rows (1,2,0,0), (0,1,1,2)
        let code = ArrayCodeSpec::f3_regen_example();
        let msg = FieldMatrix::new(2, 2, fes(&[1, 2, 0, 1])).unwrap();
        let st = code.encode_state(&msg).unwrap();
        assert_eq!(st.symbols().row(0), &fes(&[1, 2, 0, 0])[..]);
        assert_eq!(st.symbols().row(1), &fes(&[0, 1, 1, 2])[..]);
    }

    #[test]
    fn encode_state_applies_generator_per_block() {
        // every consecutive b-row block of the state is the generator applied
        // to the corresponding message block
        let code = ArrayCodeSpec::f3_regen_example();
        let b = code.block_rows() as usize;
        let data_cols = (code.containers() - code.redundancy()) as usize;
        let n = 6usize;
        let mut state = 0x5151_2929_abcd_1234u64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            Fe((state % 3) as u16)
        };
        let msg =
            FieldMatrix::new(n, data_cols, (0..n * data_cols).map(|_| next()).collect()).unwrap();
        let st = code.encode_state(&msg).unwrap();
        for block in 0..n / b {
            let mut flat = vec![Fe::ZERO; code.message_len()];
            for j in 0..data_cols {
                for i in 0..b {
                    flat[j * b + i] = msg.get(block * b + i, j);
                }
            }
            let encoded = code.encode_block(&flat);
            for j in 0..code.containers() as usize {
                for i in 0..b {
                    assert_eq!(st.get(block * b + i, j), encoded[j * b + i]);
                }
            }
        }
    }

    #[test]
    fn encode_state_rejects_partial_blocks() {
        let code = ArrayCodeSpec::f3_regen_example();
        let msg = FieldMatrix::zero(3, 2);
        assert_eq!(
            code.encode_state(&msg).unwrap_err(),
            CodeError::BlockMismatch { b: 2, n: 3 }
        );
    }

    #[test]
    fn scalar_rs_decode_from_any_two_coordinates() {
        let code = ArrayCodeSpec::rs_doubly_extended(4, 2, gf(3)).unwrap();
        for a in 0..3u16 {
            for b in 0..3u16 {
                let cw = code.encode_block(&[Fe(a), Fe(b)]);
                for c1 in 0..4u32 {
                    for c2 in (c1 + 1)..4 {
                        for p in 1..=4u32 {
                            let obs = [
                                Observation { row: 1, container: c1 + 1, value: cw[c1 as usize] },
                                Observation { row: 1, container: c2 + 1, value: cw[c2 as usize] },
                            ];
                            let out = code.erasure_decode(&obs, p).unwrap();
                            assert_eq!(
                                out,
                                DecodeOutcome::Recovered(vec![cw[(p - 1) as usize]])
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn f3_decode_recovering_and_bad_sets() {
        let code = ArrayCodeSpec::f3_regen_example();
        let msg = FieldMatrix::new(2, 2, fes(&[1, 2, 0, 1])).unwrap();
        let st = code.encode_state(&msg).unwrap();
        let obs_at = |i: u32, j: u32| Observation {
            row: i,
            container: j,
            value: st.get((i - 1) as usize, (j - 1) as usize),
        };
        // {(1,2),(1,3),(2,4)} is one of the two recovering sets of size 3
        let obs = [obs_at(1, 2), obs_at(1, 3), obs_at(2, 4)];
        let want = vec![st.get(0, 0), st.get(1, 0)];
        assert_eq!(
            code.erasure_decode(&obs, 1).unwrap(),
            DecodeOutcome::Recovered(want)
        );
        // {(1,2),(1,3),(1,4),(2,2)} is one of the two maximal non-recovering sets
        let obs = [obs_at(1, 2), obs_at(1, 3), obs_at(1, 4), obs_at(2, 2)];
        assert_eq!(
            code.erasure_decode(&obs, 1).unwrap(),
            DecodeOutcome::Unrecoverable
        );
    }

    #[test]
    fn decode_detects_inconsistent_observations() {
        let code = ArrayCodeSpec::parity(3, gf(2)).unwrap();
        // (1, 0, 0) violates parity
        let obs = [
            Observation { row: 1, container: 1, value: Fe(1) },
            Observation { row: 1, container: 2, value: Fe(0) },
            Observation { row: 1, container: 3, value: Fe(0) },
        ];
        assert_eq!(
            code.erasure_decode(&obs, 1).unwrap_err(),
            CodeError::InconsistentObservations
        );
    }

    #[test]
    fn builders_are_injective() {
        for code in [
            ArrayCodeSpec::parity(3, gf(2)).unwrap(),
            ArrayCodeSpec::parity(5, gf(7)).unwrap(),
            ArrayCodeSpec::rs_doubly_extended(4, 2, gf(3)).unwrap(),
            ArrayCodeSpec::rs_doubly_extended(5, 2, gf(4)).unwrap(),
            ArrayCodeSpec::rs_doubly_extended(6, 3, gf(5)).unwrap(),
            ArrayCodeSpec::f3_regen_example(),
        ] {
            let g = code.generator();
            assert_eq!(code.field().rank(g), code.message_len(), "{}", code.name());
        }
    }

    #[test]
    fn builtin_scalar_codes_are_mds() {
        // exhaustive restricted-rank check for every built-in scalar code with
        // q^(M-r) <= 10^4
        for (m, r, q) in [
            (3u32, 1u32, 2u64),
            (4, 1, 3),
            (5, 1, 5),
            (3, 2, 2),
            (4, 2, 3),
            (5, 2, 4),
            (5, 3, 4),
            (6, 2, 5),
            (6, 4, 7),
            (9, 2, 8),
        ] {
            let code = if r == 1 {
                ArrayCodeSpec::parity(m, gf(q)).unwrap()
            } else {
                ArrayCodeSpec::rs_doubly_extended(m, r, gf(q)).unwrap()
            };
            assert!(code.check_mds().unwrap(), "{} not MDS", code.name());
        }
    }

    #[test]
    fn encoding_is_linear() {
        let mut state = 0xfeed_5eed_0123_4567u64;
        let mut next = |q: u32| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            Fe((state % u64::from(q)) as u16)
        };
        for code in [
            ArrayCodeSpec::rs_doubly_extended(5, 2, gf(4)).unwrap(),
            ArrayCodeSpec::f3_regen_example(),
        ] {
            let f = code.field();
            let k = code.message_len();
            for _ in 0..50 {
                let x: Vec<Fe> = (0..k).map(|_| next(f.order())).collect();
                let y: Vec<Fe> = (0..k).map(|_| next(f.order())).collect();
                let sum: Vec<Fe> = x.iter().zip(&y).map(|(&a, &b)| f.add(a, b)).collect();
                let ex = code.encode_block(&x);
                let ey = code.encode_block(&y);
                let esum = code.encode_block(&sum);
                let expect: Vec<Fe> = ex.iter().zip(&ey).map(|(&a, &b)| f.add(a, b)).collect();
                assert_eq!(esum, expect);
            }
        }
    }

    #[test]
    fn token_parsing() {
        let code = ArrayCodeSpec::parse_token("f3-regen-example").unwrap().unwrap();
        assert_eq!((code.containers(), code.redundancy(), code.block_rows()), (4, 2, 2));
        assert_eq!(code.field().order(), 3);
        let code = ArrayCodeSpec::parse_token("rs:4,2,3").unwrap().unwrap();
        assert_eq!((code.containers(), code.redundancy()), (4, 2));
        let code = ArrayCodeSpec::parse_token("parity:3,2").unwrap().unwrap();
        assert_eq!((code.containers(), code.redundancy()), (3, 1));
        assert!(ArrayCodeSpec::parse_token("nonsense").is_none());
        assert!(ArrayCodeSpec::parse_token("rs:xyz").is_none());
        // well-formed token, invalid parameters
        assert!(ArrayCodeSpec::parse_token("rs:5,2,3").unwrap().is_err());
    }

    #[test]
    fn file_spec_round_trip() {
        let code = ArrayCodeSpec::f3_regen_example();
        let spec = code.to_file_spec();
        let json = serde_json::to_string(&spec).unwrap();
        let parsed: CodeSpecFile = serde_json::from_str(&json).unwrap();
        let rebuilt = ArrayCodeSpec::from_file_spec(&parsed).unwrap();
        assert_eq!(rebuilt.generator(), code.generator());
        assert_eq!(rebuilt.containers(), code.containers());
    }

    #[test]
    fn rank_deficient_generator_rejected() {
        let field = gf(3);
        let g = FieldMatrix::new(2, 3, fes(&[1, 2, 0, 2, 4 % 3, 0])).unwrap();
        assert_eq!(
            ArrayCodeSpec::from_parts("dup", field, 3, 1, 1, g).unwrap_err(),
            CodeError::RankDeficientGenerator
        );
    }
}
