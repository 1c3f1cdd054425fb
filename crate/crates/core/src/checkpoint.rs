//! Binary model checkpoints.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! "QSCDCKPT" u32:version
//! u32:len config-text
//! u64:master_seed u32:n u32:n_ancilla u32:l0 u8:family u32:T
//! u8:schedule-kind f64:lambda_s u64:schedule-seed tensor:betas tensor:eps
//! u64:scrambler-seed u32:layers tensor:scrambler
//! T x (u32:step u32:depth u64:epochs tensor:params tensor:loss)
//! ```
//!
//! A tensor is `u32:name-len name u32:ndim ndim x u64:dim f64 data`.

use std::fs;
use std::path::Path;

use crate::circuits::{param_shape, Family, ScramblerParams};
use crate::reverse::{DenoiserBlock, Model};
use crate::schedule::{NoiseSchedule, ScheduleKind};
use crate::{Error, Result};

pub const MAGIC: &[u8; 8] = b"QSCDCKPT";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    /// Canonical text of the run configuration that produced the model.
    pub config_text: String,
    pub model: Model,
}

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: usize) {
        self.0.extend_from_slice(&(v as u32).to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn bytes(&mut self, b: &[u8]) {
        self.u32(b.len());
        self.0.extend_from_slice(b);
    }
    fn tensor(&mut self, name: &str, shape: &[usize], data: &[f64]) {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        self.bytes(name.as_bytes());
        self.u32(shape.len());
        for &d in shape {
            self.u64(d as u64);
        }
        for &v in data {
            self.f64(v);
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| {
                Error::Checkpoint(format!("unexpected end of data at byte {}", self.pos))
            })?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn string(&mut self) -> Result<String> {
        let n = self.u32()?;
        String::from_utf8(self.take(n)?.to_vec())
            .map_err(|_| Error::Checkpoint("invalid UTF-8".into()))
    }
    fn tensor(&mut self, name: &str) -> Result<(Vec<usize>, Vec<f64>)> {
        let got = self.string()?;
        if got != name {
            return Err(Error::Checkpoint(format!(
                "expected tensor '{name}', found '{got}'"
            )));
        }
        let ndim = self.u32()?;
        let shape: Vec<usize> = (0..ndim)
            .map(|_| self.u64().map(|d| d as usize))
            .collect::<Result<_>>()?;
        let len: usize = shape.iter().product();
        if len.saturating_mul(8) > self.buf.len() - self.pos {
            return Err(Error::Checkpoint(format!(
                "tensor '{name}' runs past the end"
            )));
        }
        let data = (0..len).map(|_| self.f64()).collect::<Result<_>>()?;
        Ok((shape, data))
    }
}

pub fn encode(ck: &Checkpoint) -> Vec<u8> {
    let m = &ck.model;
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(MAGIC);
    w.u32(VERSION as usize);
    w.bytes(ck.config_text.as_bytes());
    w.u64(m.master_seed);
    w.u32(m.num_data);
    w.u32(m.num_ancilla);
    w.u32(m.l0);
    w.u8(m.family.code());
    w.u32(m.t_steps());

    let s = &m.schedule;
    w.u8(s.kind.code());
    w.f64(s.lambda_s);
    w.u64(s.seed);
    w.tensor("betas", &[s.betas.len()], &s.betas);
    w.tensor("eps", &[s.eps.len()], &s.eps);

    let sc = &m.scrambler;
    w.u64(sc.seed);
    w.u32(sc.layers);
    let per_step = sc.base_angles.first().map_or(0, Vec::len);
    let flat: Vec<f64> = sc.base_angles.concat();
    w.tensor("scrambler", &[sc.base_angles.len(), per_step], &flat);

    for b in &m.blocks {
        w.u32(b.step);
        w.u32(b.depth);
        w.u64(b.epochs_completed as u64);
        let shape = param_shape(b.family, b.num_qubits(), b.depth);
        w.tensor(&format!("block{}.params", b.step), &shape, &b.params);
        w.tensor(
            &format!("block{}.loss", b.step),
            &[b.loss_trace.len()],
            &b.loss_trace,
        );
    }
    w.0
}

pub fn decode(bytes: &[u8]) -> Result<Checkpoint> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::Checkpoint("not a checkpoint file".into()));
    }
    let version = r.u32()?;
    if version != VERSION as usize {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let config_text = r.string()?;
    let master_seed = r.u64()?;
    let num_data = r.u32()?;
    let num_ancilla = r.u32()?;
    let l0 = r.u32()?;
    let family =
        Family::from_code(r.u8()?).ok_or_else(|| Error::Checkpoint("unknown family".into()))?;
    let t_steps = r.u32()?;

    let kind = ScheduleKind::from_code(r.u8()?)
        .ok_or_else(|| Error::Checkpoint("unknown schedule".into()))?;
    let lambda_s = r.f64()?;
    let sched_seed = r.u64()?;
    let (_, betas) = r.tensor("betas")?;
    let (_, eps) = r.tensor("eps")?;
    if betas.len() != t_steps || eps.len() != t_steps {
        return Err(Error::Checkpoint("schedule length does not match T".into()));
    }
    let schedule = NoiseSchedule::from_parts(kind, lambda_s, sched_seed, betas, eps);

    let scr_seed = r.u64()?;
    let layers = r.u32()?;
    let (shape, flat) = r.tensor("scrambler")?;
    if shape.len() != 2 || shape[0] != t_steps {
        return Err(Error::Checkpoint(
            "scrambler tensor has the wrong shape".into(),
        ));
    }
    let base_angles = if shape[1] == 0 {
        vec![Vec::new(); shape[0]]
    } else {
        flat.chunks(shape[1]).map(<[f64]>::to_vec).collect()
    };
    let scrambler = ScramblerParams {
        seed: scr_seed,
        num_qubits: num_data,
        layers,
        base_angles,
    };

    let mut blocks = Vec::with_capacity(t_steps);
    for t in 1..=t_steps {
        let step = r.u32()?;
        let depth = r.u32()?;
        if step != t || depth != l0 + t {
            return Err(Error::Checkpoint(format!(
                "block {t} header is inconsistent"
            )));
        }
        let epochs = r.u64()? as usize;
        let (_, params) = r.tensor(&format!("block{t}.params"))?;
        let (_, loss) = r.tensor(&format!("block{t}.loss"))?;
        let mut b = DenoiserBlock::new(t, family, num_data, num_ancilla, l0, params)
            .map_err(|e| Error::Checkpoint(e.to_string()))?;
        b.epochs_completed = epochs;
        b.loss_trace = loss;
        blocks.push(b);
    }
    if r.pos != bytes.len() {
        return Err(Error::Checkpoint(format!(
            "{} trailing bytes",
            bytes.len() - r.pos
        )));
    }
    Ok(Checkpoint {
        config_text,
        model: Model {
            num_data,
            num_ancilla,
            l0,
            family,
            master_seed,
            schedule,
            scrambler,
            blocks,
        },
    })
}

/// Writes through a temporary file and renames, so a crash never leaves a
/// half-written checkpoint behind.
pub fn save(ck: &Checkpoint, path: &Path) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, encode(ck))?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Checkpoint> {
    decode(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reverse::ModelSpec;

    fn sample() -> Checkpoint {
        let spec = ModelSpec {
            num_data: 2,
            num_ancilla: 1,
            t_steps: 3,
            l0: 2,
            family: Family::Circuit2,
            scrambler_layers: 2,
            schedule: ScheduleKind::Sigmoid,
            lambda_s: 0.3,
            seed: 99,
        };
        let mut model = Model::new(&spec).unwrap();
        model.blocks[2].epochs_completed = 4;
        model.blocks[2].loss_trace = vec![1.5, 1.0, 0.75, f64::MIN_POSITIVE];
        Checkpoint {
            config_text: "seed = 99\n".into(),
            model,
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let ck = sample();
        let bytes = encode(&ck);
        let back = decode(&bytes).unwrap();
        assert_eq!(back, ck);
        assert_eq!(encode(&back), bytes);
    }

    #[test]
    fn rejects_corruption() {
        let bytes = encode(&sample());
        assert!(decode(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(decode(&extra).is_err());
        let mut bad = bytes;
        bad[0] = b'X';
        assert!(decode(&bad).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.ckpt");
        save(&sample(), &p).unwrap();
        assert_eq!(load(&p).unwrap(), sample());
    }
}
