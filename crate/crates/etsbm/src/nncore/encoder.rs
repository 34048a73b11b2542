//! Dense V -> H -> H -> 2K encoder with softplus activations, mean and
//! log-variance heads, exact backpropagation and a text checkpoint format.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{sigmoid, softplus, NnError};

/// Log-variance head outputs are clamped to this symmetric range.
pub const LOG_VAR_CLAMP: f64 = 10.0;

/// Parameters of the 3-layer encoder. Shapes: `w1: H x V`, `w2: H x H`,
/// `w3: 2K x H`; the first K output rows are the mean head, the last K the
/// log-variance head.
#[derive(Debug, Clone)]
pub struct EncoderParams {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub latent_dim: usize,
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
    pub w3: Array2<f64>,
    pub b3: Array1<f64>,
}

/// Intermediate activations retained for the backward pass.
#[derive(Debug, Clone)]
pub struct EncoderCache {
    x: Array2<f64>,
    z1: Array2<f64>,
    h1: Array2<f64>,
    z2: Array2<f64>,
    h2: Array2<f64>,
    lv_raw: Array2<f64>,
}

/// Forward output: per-row variational mean and clamped log-variance.
#[derive(Debug, Clone)]
pub struct EncoderOutput {
    pub mu: Array2<f64>,
    pub log_var: Array2<f64>,
    pub cache: EncoderCache,
}

/// Parameter gradients, same shapes as [`EncoderParams`].
#[derive(Debug, Clone)]
pub struct EncoderGrads {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
    pub w3: Array2<f64>,
    pub b3: Array1<f64>,
}

impl EncoderParams {
    /// Seeded init: weights ~ N(0, 1/fan_in), biases zero.
    pub fn new_seeded(input_dim: usize, hidden_dim: usize, latent_dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut init = |rows: usize, cols: usize| {
            let sd = 1.0 / (cols as f64).sqrt();
            Array2::from_shape_fn((rows, cols), |_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z * sd
            })
        };
        let w1 = init(hidden_dim, input_dim);
        let w2 = init(hidden_dim, hidden_dim);
        let w3 = init(2 * latent_dim, hidden_dim);
        Self {
            input_dim,
            hidden_dim,
            latent_dim,
            w1,
            b1: Array1::zeros(hidden_dim),
            w2,
            b2: Array1::zeros(hidden_dim),
            w3,
            b3: Array1::zeros(2 * latent_dim),
        }
    }

    /// Forward pass over a batch of input rows (each a normalized
    /// meta-document or the all-zero vector for an empty pair).
    pub fn forward(&self, x: ArrayView2<f64>) -> Result<EncoderOutput, NnError> {
        if x.ncols() != self.input_dim {
            return Err(NnError::ShapeMismatch(format!(
                "input has {} columns, encoder expects {}",
                x.ncols(),
                self.input_dim
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(NnError::NonFinite("encoder input"));
        }
        let k = self.latent_dim;
        let mut z1 = x.dot(&self.w1.t());
        z1 += &self.b1;
        let h1 = z1.mapv(softplus);
        let mut z2 = h1.dot(&self.w2.t());
        z2 += &self.b2;
        let h2 = z2.mapv(softplus);
        let mut out = h2.dot(&self.w3.t());
        out += &self.b3;

        let mu = out.slice(ndarray::s![.., ..k]).to_owned();
        let lv_raw = out.slice(ndarray::s![.., k..]).to_owned();
        let log_var = lv_raw.mapv(|v| v.clamp(-LOG_VAR_CLAMP, LOG_VAR_CLAMP));
        Ok(EncoderOutput {
            mu,
            log_var,
            cache: EncoderCache {
                x: x.to_owned(),
                z1,
                h1,
                z2,
                h2,
                lv_raw,
            },
        })
    }

    /// Exact backward pass. Returns parameter gradients and the gradient with
    /// respect to the input batch.
    pub fn backward(
        &self,
        cache: &EncoderCache,
        d_mu: ArrayView2<f64>,
        d_log_var: ArrayView2<f64>,
    ) -> (EncoderGrads, Array2<f64>) {
        let batch = cache.x.nrows();
        let k = self.latent_dim;
        let mut d_out = Array2::<f64>::zeros((batch, 2 * k));
        d_out.slice_mut(ndarray::s![.., ..k]).assign(&d_mu);
        {
            let mut lv_part = d_out.slice_mut(ndarray::s![.., k..]);
            lv_part.assign(&d_log_var);
            // clamp is flat outside its range: no gradient flows there
            lv_part.zip_mut_with(&cache.lv_raw, |g, &raw| {
                if raw.abs() > LOG_VAR_CLAMP {
                    *g = 0.0;
                }
            });
        }

        let d_w3 = d_out.t().dot(&cache.h2);
        let d_b3 = d_out.sum_axis(Axis(0));
        let d_h2 = d_out.dot(&self.w3);

        let mut d_z2 = d_h2;
        d_z2.zip_mut_with(&cache.z2, |g, &z| *g *= sigmoid(z));
        let d_w2 = d_z2.t().dot(&cache.h1);
        let d_b2 = d_z2.sum_axis(Axis(0));
        let d_h1 = d_z2.dot(&self.w2);

        let mut d_z1 = d_h1;
        d_z1.zip_mut_with(&cache.z1, |g, &z| *g *= sigmoid(z));
        let d_w1 = d_z1.t().dot(&cache.x);
        let d_b1 = d_z1.sum_axis(Axis(0));
        let d_x = d_z1.dot(&self.w1);

        (
            EncoderGrads {
                w1: d_w1,
                b1: d_b1,
                w2: d_w2,
                b2: d_b2,
                w3: d_w3,
                b3: d_b3,
            },
            d_x,
        )
    }

    /// Mutable views of every parameter block, paired with stable names.
    /// Block order matches [`EncoderGrads::blocks`].
    pub fn blocks_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        let Self {
            w1, b1, w2, b2, w3, b3, ..
        } = self;
        vec![
            ("w1", w1.as_slice_mut().expect("standard layout")),
            ("b1", b1.as_slice_mut().expect("standard layout")),
            ("w2", w2.as_slice_mut().expect("standard layout")),
            ("b2", b2.as_slice_mut().expect("standard layout")),
            ("w3", w3.as_slice_mut().expect("standard layout")),
            ("b3", b3.as_slice_mut().expect("standard layout")),
        ]
    }

    pub fn save(&self, path: &Path) -> Result<(), NnError> {
        let file = std::fs::File::create(path)?;
        let mut w = BufWriter::new(file);
        writeln!(
            w,
            "NNPARAMS v1 {} {} {}",
            self.input_dim, self.hidden_dim, self.latent_dim
        )?;
        let arrays = self.named_arrays();
        write_named_arrays(&mut w, &arrays)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, NnError> {
        let file = std::fs::File::open(path)?;
        let mut lines = BufReader::new(file).lines().enumerate();
        let (_, header) = lines.next().ok_or(NnError::Parse {
            line: 1,
            msg: "empty file".into(),
        })?;
        let header = header?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 5 || parts[0] != "NNPARAMS" || parts[1] != "v1" {
            return Err(NnError::Parse {
                line: 1,
                msg: "expected `NNPARAMS v1 <V> <H> <K>`".into(),
            });
        }
        let dims: Vec<usize> = parts[2..]
            .iter()
            .map(|p| p.parse())
            .collect::<Result<_, _>>()
            .map_err(|e| NnError::Parse {
                line: 1,
                msg: format!("bad dimension: {e}"),
            })?;
        let arrays = read_named_arrays(&mut lines)?;
        let get = |name: &str| {
            arrays.get(name).cloned().ok_or_else(|| NnError::Parse {
                line: 0,
                msg: format!("missing array `{name}`"),
            })
        };
        let row = |a: Array2<f64>| a.row(0).to_owned();
        Ok(Self {
            input_dim: dims[0],
            hidden_dim: dims[1],
            latent_dim: dims[2],
            w1: get("w1")?,
            b1: row(get("b1")?),
            w2: get("w2")?,
            b2: row(get("b2")?),
            w3: get("w3")?,
            b3: row(get("b3")?),
        })
    }

    fn named_arrays(&self) -> Vec<(&'static str, Array2<f64>)> {
        vec![
            ("w1", self.w1.clone()),
            ("b1", self.b1.clone().insert_axis(Axis(0))),
            ("w2", self.w2.clone()),
            ("b2", self.b2.clone().insert_axis(Axis(0))),
            ("w3", self.w3.clone()),
            ("b3", self.b3.clone().insert_axis(Axis(0))),
        ]
    }
}

impl EncoderGrads {
    pub fn blocks(&self) -> Vec<(&'static str, &[f64])> {
        vec![
            ("w1", self.w1.as_slice().expect("standard layout")),
            ("b1", self.b1.as_slice().expect("standard layout")),
            ("w2", self.w2.as_slice().expect("standard layout")),
            ("b2", self.b2.as_slice().expect("standard layout")),
            ("w3", self.w3.as_slice().expect("standard layout")),
            ("b3", self.b3.as_slice().expect("standard layout")),
        ]
    }
}

/// Writes named 2-D arrays as `A <name> <rows> <cols>` followed by one line
/// of `Display`-formatted values per row. `f64` Display round-trips exactly.
pub fn write_named_arrays<W: Write>(
    w: &mut W,
    arrays: &[(&str, Array2<f64>)],
) -> Result<(), NnError> {
    writeln!(w, "{} arrays", arrays.len())?;
    for (name, a) in arrays {
        writeln!(w, "A {} {} {}", name, a.nrows(), a.ncols())?;
        for r in a.rows() {
            let mut first = true;
            for v in r {
                if !first {
                    write!(w, " ")?;
                }
                write!(w, "{v}")?;
                first = false;
            }
            writeln!(w)?;
        }
    }
    Ok(())
}

/// Counterpart of [`write_named_arrays`] over an enumerated line iterator.
pub fn read_named_arrays<I>(lines: &mut I) -> Result<HashMap<String, Array2<f64>>, NnError>
where
    I: Iterator<Item = (usize, std::io::Result<String>)>,
{
    let mut next_line = |what: &str| -> Result<(usize, String), NnError> {
        match lines.next() {
            Some((i, Ok(l))) => Ok((i + 1, l)),
            Some((i, Err(e))) => Err(NnError::Parse {
                line: i + 1,
                msg: e.to_string(),
            }),
            None => Err(NnError::Parse {
                line: 0,
                msg: format!("unexpected end of file, expected {what}"),
            }),
        }
    };
    let (lno, count_line) = next_line("array count")?;
    let n: usize = count_line
        .split_whitespace()
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or(NnError::Parse {
            line: lno,
            msg: "expected `<n> arrays`".into(),
        })?;
    let mut out = HashMap::new();
    for _ in 0..n {
        let (lno, head) = next_line("array header")?;
        let parts: Vec<&str> = head.split_whitespace().collect();
        if parts.len() != 4 || parts[0] != "A" {
            return Err(NnError::Parse {
                line: lno,
                msg: "expected `A <name> <rows> <cols>`".into(),
            });
        }
        let name = parts[1].to_string();
        let rows: usize = parts[2].parse().map_err(|e| NnError::Parse {
            line: lno,
            msg: format!("bad rows: {e}"),
        })?;
        let cols: usize = parts[3].parse().map_err(|e| NnError::Parse {
            line: lno,
            msg: format!("bad cols: {e}"),
        })?;
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let (lno, row) = next_line("array row")?;
            let before = data.len();
            for tok in row.split_whitespace() {
                let v: f64 = tok.parse().map_err(|e| NnError::Parse {
                    line: lno,
                    msg: format!("bad value `{tok}`: {e}"),
                })?;
                data.push(v);
            }
            if data.len() - before != cols {
                return Err(NnError::Parse {
                    line: lno,
                    msg: format!("expected {cols} values, got {}", data.len() - before),
                });
            }
        }
        let arr = Array2::from_shape_vec((rows, cols), data).map_err(|e| NnError::Parse {
            line: lno,
            msg: e.to_string(),
        })?;
        out.insert(name, arr);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::arr2;

    #[test]
    fn zero_weights_return_mean_head_bias() {
        let mut enc = EncoderParams::new_seeded(4, 8, 2, 3);
        enc.w1.fill(0.0);
        enc.w2.fill(0.0);
        enc.w3.fill(0.0);
        enc.b3 = Array1::from(vec![0.3, -0.7, 0.1, 0.2]);
        let x = arr2(&[[0.25, 0.25, 0.25, 0.25], [1.0, 0.0, 0.0, 0.0]]);
        let out = enc.forward(x.view()).unwrap();
        for r in 0..2 {
            assert_abs_diff_eq!(out.mu[[r, 0]], 0.3, epsilon = 1e-15);
            assert_abs_diff_eq!(out.mu[[r, 1]], -0.7, epsilon = 1e-15);
        }
    }

    #[test]
    fn forward_is_pure() {
        let enc = EncoderParams::new_seeded(5, 6, 3, 1);
        let x = Array2::from_shape_fn((3, 5), |(i, j)| ((i + 2 * j) as f64 * 0.1).sin().abs());
        let a = enc.forward(x.view()).unwrap();
        let b = enc.forward(x.view()).unwrap();
        assert_eq!(a.mu, b.mu);
        assert_eq!(a.log_var, b.log_var);
    }

    #[test]
    fn rejects_non_finite_input() {
        let enc = EncoderParams::new_seeded(3, 4, 2, 1);
        let x = arr2(&[[0.5, f64::NAN, 0.5]]);
        assert!(enc.forward(x.view()).is_err());
    }

    #[test]
    fn checkpoint_round_trips_exactly() {
        let enc = EncoderParams::new_seeded(7, 9, 3, 42);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("enc.txt");
        enc.save(&path).unwrap();
        let back = EncoderParams::load(&path).unwrap();
        assert_eq!(enc.w1, back.w1);
        assert_eq!(enc.b1, back.b1);
        assert_eq!(enc.w2, back.w2);
        assert_eq!(enc.b2, back.b2);
        assert_eq!(enc.w3, back.w3);
        assert_eq!(enc.b3, back.b3);
    }
}
