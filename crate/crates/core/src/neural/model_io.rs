//! Binary model files.
//!
//! Layout (little endian): the 8-byte magic `GRIDCNN1`; the vocabulary as a
//! count followed by length-prefixed symbols; hyperparameters; the init seed;
//! then each parameter group as a `u64` length and that many `f64` values.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use super::{CoherenceModel, HyperParams, Params, Pooling};
use crate::error::{Error, Result};
use crate::grid::GridToken;

pub const MAGIC: &[u8; 8] = b"GRIDCNN1";

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_f64(out: &mut Vec<u8>, v: f64) {
    out.extend_from_slice(&v.to_le_bytes());
}

pub fn save_model<W: Write>(model: &CoherenceModel, mut sink: W) -> Result<()> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    put_u64(&mut out, GridToken::VOCAB.len() as u64);
    for tok in GridToken::VOCAB {
        let sym = tok.symbol().as_bytes();
        out.push(sym.len() as u8);
        out.extend_from_slice(sym);
    }
    let hp = &model.hp;
    for v in [
        hp.batch,
        hp.emb_dim,
        hp.filters,
        hp.window,
        hp.pool,
        hp.seq_len,
        hp.max_epochs,
        hp.patience,
        hp.negatives,
    ] {
        put_u64(&mut out, v as u64);
    }
    out.push(match hp.pooling {
        Pooling::Chunked => 0,
        Pooling::Global => 1,
    });
    for v in [
        hp.dropout,
        hp.learning_rate,
        hp.rmsprop_decay,
        hp.rmsprop_eps,
    ] {
        put_f64(&mut out, v);
    }
    put_u64(&mut out, model.seed);
    for group in model.params.groups() {
        put_u64(&mut out, group.len() as u64);
        for &v in group {
            put_f64(&mut out, v);
        }
    }
    sink.write_all(&out)?;
    sink.flush()?;
    Ok(())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::ModelFormat("file is truncated".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::ModelFormat("size out of range".into()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn load_model<R: Read>(mut source: R) -> Result<CoherenceModel> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    let mut r = Reader {
        bytes: &bytes,
        pos: 0,
    };
    if r.take(MAGIC.len()).ok() != Some(MAGIC.as_slice()) {
        return Err(Error::ModelFormat(
            "bad magic header (not a GRIDCNN1 model)".into(),
        ));
    }
    let vocab = r.usize()?;
    if vocab != GridToken::VOCAB.len() {
        return Err(Error::ModelFormat(format!("vocabulary of {vocab} symbols")));
    }
    for tok in GridToken::VOCAB {
        let len = r.take(1)?[0] as usize;
        if r.take(len)? != tok.symbol().as_bytes() {
            return Err(Error::ModelFormat("vocabulary order mismatch".into()));
        }
    }
    let mut ints = [0usize; 9];
    for v in &mut ints {
        *v = r.usize()?;
    }
    let pooling = match r.take(1)?[0] {
        0 => Pooling::Chunked,
        1 => Pooling::Global,
        other => return Err(Error::ModelFormat(format!("unknown pooling mode {other}"))),
    };
    let hp = HyperParams {
        batch: ints[0],
        emb_dim: ints[1],
        filters: ints[2],
        window: ints[3],
        pool: ints[4],
        seq_len: ints[5],
        max_epochs: ints[6],
        patience: ints[7],
        negatives: ints[8],
        pooling,
        dropout: r.f64()?,
        learning_rate: r.f64()?,
        rmsprop_decay: r.f64()?,
        rmsprop_eps: r.f64()?,
    };
    hp.validate()?;
    let seed = r.u64()?;
    let mut params = Params::zeros(&hp);
    for (name, group) in Params::GROUP_NAMES.iter().zip(params.groups_mut()) {
        let len = r.usize()?;
        if len != group.len() {
            return Err(Error::ModelFormat(format!(
                "{name}: {len} values, expected {}",
                group.len()
            )));
        }
        for v in group.iter_mut() {
            *v = r.f64()?;
        }
    }
    if r.pos != bytes.len() {
        return Err(Error::ModelFormat("trailing bytes after parameters".into()));
    }
    if !params.all_finite() {
        return Err(Error::ModelFormat("non-finite parameter".into()));
    }
    Ok(CoherenceModel { hp, params, seed })
}

pub fn save_model_file(model: &CoherenceModel, path: &Path) -> Result<()> {
    save_model(model, fs::File::create(path)?)
}

pub fn load_model_file(path: &Path) -> Result<CoherenceModel> {
    load_model(fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::init_model;

    fn small() -> CoherenceModel {
        let hp = HyperParams {
            emb_dim: 4,
            filters: 3,
            seq_len: 32,
            ..Default::default()
        };
        let mut m = init_model(hp, 12).unwrap();
        m.params
            .score_weights
            .iter_mut()
            .enumerate()
            .for_each(|(i, w)| *w = i as f64 * 0.1);
        m
    }

    #[test]
    fn round_trip() {
        let m = small();
        let mut buf = Vec::new();
        save_model(&m, &mut buf).unwrap();
        assert_eq!(&buf[..8], MAGIC);
        assert_eq!(load_model(buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn truncated_file_fails() {
        let mut buf = Vec::new();
        save_model(&small(), &mut buf).unwrap();
        for cut in [0, 5, 20, buf.len() - 1] {
            assert!(load_model(&buf[..cut]).is_err(), "cut at {cut}");
        }
    }

    #[test]
    fn bad_magic_fails() {
        let mut buf = Vec::new();
        save_model(&small(), &mut buf).unwrap();
        buf[7] = b'2';
        assert!(matches!(
            load_model(buf.as_slice()),
            Err(Error::ModelFormat(_))
        ));
    }

    #[test]
    fn window_longer_than_sequence_fails() {
        let mut buf = Vec::new();
        save_model(&small(), &mut buf).unwrap();
        // window is the 4th hyperparameter after magic + vocabulary
        let vocab_bytes: usize = 8 + GridToken::VOCAB
            .iter()
            .map(|t| 1 + t.symbol().len())
            .sum::<usize>();
        let at = 8 + vocab_bytes + 3 * 8;
        buf[at..at + 8].copy_from_slice(&64u64.to_le_bytes());
        assert!(matches!(
            load_model(buf.as_slice()),
            Err(Error::Validation(_))
        ));
    }
}
