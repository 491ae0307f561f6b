use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;
use std::rc::Rc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::graphconv::{graphconv_forward, BoundGraphConv, GraphConvParams, MolBatch};
use super::mlp::{Activation, BoundMlp, Mlp};
use super::standardize::FeatureStandardizer;
use crate::chem::MolGraph;
use crate::data::FeatureCache;
use crate::error::{Error, Result};
use crate::fingerprint::FingerprintVector;
use crate::protein::{PscVector, PSC_LEN};
use crate::tensor::{Graph, Tensor, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelVariant {
    /// Fingerprint + protein composition, MSE only.
    EcfpPsc,
    /// Graph-convolution descriptor + protein composition, MSE only.
    GraphconvPsc,
    /// Fingerprint + graph convolution + protein composition, trained with
    /// the adversarial alignment term.
    Ivpgan,
}

impl ModelVariant {
    pub const ALL: [ModelVariant; 3] = [ModelVariant::EcfpPsc, ModelVariant::GraphconvPsc, ModelVariant::Ivpgan];

    pub fn uses_fingerprint(self) -> bool {
        matches!(self, ModelVariant::EcfpPsc | ModelVariant::Ivpgan)
    }

    pub fn uses_graphconv(self) -> bool {
        matches!(self, ModelVariant::GraphconvPsc | ModelVariant::Ivpgan)
    }

    pub fn adversarial(self) -> bool {
        self == ModelVariant::Ivpgan
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelVariant::EcfpPsc => "ecfp_psc",
            ModelVariant::GraphconvPsc => "graphconv_psc",
            ModelVariant::Ivpgan => "ivpgan",
        }
    }
}

impl std::str::FromStr for ModelVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelVariant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown model variant {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub variant: ModelVariant,
    pub gconv_widths: Vec<usize>,
    pub generator_hidden: Vec<usize>,
    pub disc_hidden: Vec<usize>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            variant: ModelVariant::Ivpgan,
            gconv_widths: vec![64, 128],
            generator_hidden: vec![2048, 512],
            disc_hidden: vec![32, 16],
        }
    }
}

/// Training example: indices into an [`EncodedSet`]'s compound and target
/// tables plus the label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub compound: usize,
    pub target: usize,
    pub affinity: f64,
}

/// Model-ready view of a set of interactions: molecular graphs, fingerprint
/// bits and standardized composition vectors, each stored once per entity.
#[derive(Debug, Clone)]
pub struct EncodedSet<'a> {
    pub graphs: Vec<&'a MolGraph>,
    pub fingerprints: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
    pub samples: Vec<Sample>,
}

impl<'a> EncodedSet<'a> {
    /// Encodes `(compound id, target id, affinity)` triples against a feature
    /// cache. Composition vectors pass through `standardizer`.
    pub fn build<'r>(
        cache: &'a FeatureCache,
        rows: impl IntoIterator<Item = (&'r str, &'r str, f64)>,
        standardizer: &FeatureStandardizer,
    ) -> Result<Self> {
        let mut compound_ix: BTreeMap<&str, usize> = BTreeMap::new();
        let mut target_ix: BTreeMap<&str, usize> = BTreeMap::new();
        let mut set = EncodedSet {
            graphs: Vec::new(),
            fingerprints: Vec::new(),
            targets: Vec::new(),
            samples: Vec::new(),
        };
        for (cid, tid, affinity) in rows {
            let compound = match compound_ix.get(cid) {
                Some(&i) => i,
                None => {
                    let (key, feats) = cache
                        .compounds
                        .get_key_value(cid)
                        .ok_or_else(|| Error::Data(format!("compound {cid:?} missing from feature cache")))?;
                    set.graphs.push(&feats.graph);
                    set.fingerprints.push(feats.fingerprint.to_f64());
                    compound_ix.insert(key.as_str(), set.graphs.len() - 1);
                    set.graphs.len() - 1
                }
            };
            let target = match target_ix.get(tid) {
                Some(&i) => i,
                None => {
                    let (key, feats) = cache
                        .targets
                        .get_key_value(tid)
                        .ok_or_else(|| Error::Data(format!("target {tid:?} missing from feature cache")))?;
                    set.targets.push(standardizer.transform(feats.psc.as_slice())?);
                    target_ix.insert(key.as_str(), set.targets.len() - 1);
                    set.targets.len() - 1
                }
            };
            set.samples.push(Sample {
                compound,
                target,
                affinity,
            });
        }
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labels(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.affinity).collect()
    }
}

/// Concatenates `[fingerprint bits, graph descriptor, standardized PSC]`.
pub fn build_civ(
    fingerprint: &FingerprintVector,
    gconv: &[f64],
    psc: &PscVector,
    standardizer: &FeatureStandardizer,
) -> Result<Vec<f64>> {
    let scaled = standardizer.transform(psc.as_slice())?;
    let mut civ = fingerprint.to_f64();
    civ.extend_from_slice(gconv);
    civ.extend(scaled);
    Ok(civ)
}

/// Predicted affinity for each row of `civ` (`[batch, width]` to `[batch, 1]`).
pub fn generator_forward(g: &mut Graph, civ: Var, generator: &BoundMlp) -> Result<Var> {
    generator.forward(g, civ)
}

/// Probability that each alignment row comes from the label distribution.
pub fn discriminator_forward(g: &mut Graph, rows: Var, discriminator: &BoundMlp, k: usize) -> Result<Var> {
    let cols = g.value(rows).cols();
    if cols != k || g.value(rows).shape().len() != 2 {
        return Err(Error::Shape {
            op: "discriminator_forward",
            left: g.value(rows).shape().to_vec(),
            right: vec![k],
        });
    }
    discriminator.forward(g, rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtiModel {
    pub config: ModelConfig,
    pub n_bits: usize,
    /// Alignment row length seen by the discriminator.
    pub k: usize,
    pub gconv: Option<GraphConvParams>,
    pub generator: Mlp,
    pub discriminator: Mlp,
    pub standardizer: FeatureStandardizer,
}

#[derive(Debug, Clone)]
pub struct BoundModel {
    pub gconv: Option<BoundGraphConv>,
    pub generator: BoundMlp,
}

impl BoundModel {
    pub fn vars(&self) -> Vec<Var> {
        let mut v = self.gconv.as_ref().map(BoundGraphConv::vars).unwrap_or_default();
        v.extend(self.generator.vars());
        v
    }
}

impl DtiModel {
    pub fn new(
        config: &ModelConfig,
        n_bits: usize,
        k: usize,
        standardizer: FeatureStandardizer,
        seed: u64,
    ) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let variant = config.variant;
        let gconv = if variant.uses_graphconv() {
            Some(GraphConvParams::new(&config.gconv_widths, &mut rng)?)
        } else {
            None
        };
        let mut width = PSC_LEN;
        if variant.uses_fingerprint() {
            width += n_bits;
        }
        if let Some(gc) = &gconv {
            width += gc.output_width();
        }
        let mut widths = vec![width];
        widths.extend(&config.generator_hidden);
        widths.push(1);
        let generator = Mlp::new(&widths, Activation::Relu, Activation::Identity, &mut rng)?;
        if k == 0 {
            return Err(Error::Config("neighbor count k must be at least 1".into()));
        }
        let mut widths = vec![k];
        widths.extend(&config.disc_hidden);
        widths.push(1);
        let discriminator = Mlp::new(&widths, Activation::Relu, Activation::Sigmoid, &mut rng)?;
        Ok(Self {
            config: config.clone(),
            n_bits,
            k,
            gconv,
            generator,
            discriminator,
            standardizer,
        })
    }

    /// Sets the bias of the generator's single output unit.
    pub fn set_output_bias(&mut self, value: f64) {
        if let Some(last) = self.generator.layers.last_mut() {
            last.bias.data_mut().iter_mut().for_each(|b| *b = value);
        }
    }

    pub fn civ_width(&self) -> usize {
        self.generator.input_width()
    }

    pub fn bind(&self, g: &mut Graph, trainable: bool) -> BoundModel {
        BoundModel {
            gconv: self.gconv.as_ref().map(|p| p.bind(g, trainable)),
            generator: self.generator.bind(g, trainable),
        }
    }

    /// Generator-side parameters in the order of [`BoundModel::vars`].
    pub fn generator_tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut v = self
            .gconv
            .as_mut()
            .map(GraphConvParams::tensors_mut)
            .unwrap_or_default();
        v.extend(self.generator.tensors_mut());
        v
    }

    fn all_tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut v = self
            .gconv
            .as_mut()
            .map(GraphConvParams::tensors_mut)
            .unwrap_or_default();
        v.extend(self.generator.tensors_mut());
        v.extend(self.discriminator.tensors_mut());
        v
    }

    /// Combined input vectors for `batch` (indices into `set.samples`),
    /// returned as a constant matrix holding the fingerprint and composition
    /// blocks with the graph-descriptor columns left at zero, plus the
    /// graph-descriptor block and its column offset.
    pub fn civ_parts(
        &self,
        g: &mut Graph,
        bound: &BoundModel,
        set: &EncodedSet<'_>,
        batch: &[usize],
    ) -> Result<(Var, Option<(Var, usize)>)> {
        let variant = self.config.variant;
        let width = self.civ_width();
        let fp_width = if variant.uses_fingerprint() { self.n_bits } else { 0 };
        let psc_offset = width - PSC_LEN;
        let mut data = vec![0.0; batch.len() * width];
        for (row, &i) in data.chunks_exact_mut(width).zip(batch) {
            let sample = set.samples[i];
            if fp_width > 0 {
                let fp = &set.fingerprints[sample.compound];
                if fp.len() != fp_width {
                    return Err(Error::Data(format!(
                        "fingerprint length {} does not match model width {fp_width}",
                        fp.len()
                    )));
                }
                row[..fp_width].copy_from_slice(fp);
            }
            row[psc_offset..].copy_from_slice(&set.targets[sample.target]);
        }
        let fixed = g.constant(Tensor::matrix(batch.len(), width, data)?);
        let Some(gc) = &bound.gconv else {
            return Ok((fixed, None));
        };
        // encode each distinct compound once, then spread rows to samples
        let mut slot: BTreeMap<usize, usize> = BTreeMap::new();
        let mut graphs = Vec::new();
        let mut rows = Vec::with_capacity(batch.len());
        for &i in batch {
            let c = set.samples[i].compound;
            let next = slot.len();
            let s = *slot.entry(c).or_insert_with(|| {
                graphs.push(set.graphs[c]);
                next
            });
            rows.push(vec![s]);
        }
        let mols = MolBatch::new(&graphs);
        let enc = graphconv_forward(g, gc, &mols)?;
        let per_sample = g.row_group_sum(enc, Rc::new(rows))?;
        Ok((fixed, Some((per_sample, fp_width))))
    }

    /// Combined input vectors `[batch, civ_width]` as one node.
    pub fn civ_batch(&self, g: &mut Graph, bound: &BoundModel, set: &EncodedSet<'_>, batch: &[usize]) -> Result<Var> {
        let (fixed, part) = self.civ_parts(g, bound, set, batch)?;
        let Some((gc, offset)) = part else {
            return Ok(fixed);
        };
        let width = g.value(gc).cols();
        let total = self.civ_width();
        let n = batch.len();
        // [fixed | gc] then a column permutation that moves gc into place
        let both = g.concat(&[fixed, gc], 1)?;
        let stride = total + width;
        let mut perm = Vec::with_capacity(n * total);
        for r in 0..n {
            for c in 0..total {
                let src = if (offset..offset + width).contains(&c) {
                    total + c - offset
                } else {
                    c
                };
                perm.push(r * stride + src);
            }
        }
        g.gather(both, perm, vec![n, total])
    }

    /// Generator output `[batch, 1]` for the listed samples.
    pub fn forward(&self, g: &mut Graph, bound: &BoundModel, set: &EncodedSet<'_>, batch: &[usize]) -> Result<Var> {
        let (fixed, part) = self.civ_parts(g, bound, set, batch)?;
        let parts: Vec<(Var, usize)> = part.into_iter().collect();
        bound.generator.forward_split(g, fixed, &parts)
    }

    /// Predictions for every sample of `set`, computed in chunks.
    pub fn predict(&self, set: &EncodedSet<'_>) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(set.len());
        let idx: Vec<usize> = (0..set.len()).collect();
        for chunk in idx.chunks(256) {
            let mut g = Graph::new();
            let bound = self.bind(&mut g, false);
            let y = self.forward(&mut g, &bound, set, chunk)?;
            out.extend_from_slice(g.value(y).data());
        }
        Ok(out)
    }
}

pub const CHECKPOINT_VERSION: u32 = 1;
const CHECKPOINT_MAGIC: &[u8; 8] = b"DTICKPT\0";

/// Trained model plus the configuration that produced it.
///
/// On disk: 8-byte magic, little-endian u32 version, little-endian u64
/// header length, a JSON header (the model with tensor data stripped, plus
/// metadata), then every tensor's values as little-endian f64 in header
/// order. Identical models produce identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub model: DtiModel,
    /// Resolved experiment configuration, echoed for auditability.
    pub config: serde_json::Value,
    pub seed: u64,
    pub fold: Option<usize>,
    /// Epoch the parameters were taken from.
    pub epoch: usize,
}

impl Checkpoint {
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let mut header = self.clone();
        let mut blob = Vec::new();
        for t in header.model.all_tensors_mut() {
            for v in t.data() {
                blob.extend_from_slice(&v.to_le_bytes());
            }
            *t = stripped(t.shape());
        }
        let json = serde_json::to_vec(&header)?;
        let io = |e| Error::io("<checkpoint>", e);
        w.write_all(CHECKPOINT_MAGIC).map_err(io)?;
        w.write_all(&CHECKPOINT_VERSION.to_le_bytes()).map_err(io)?;
        w.write_all(&(json.len() as u64).to_le_bytes()).map_err(io)?;
        w.write_all(&json).map_err(io)?;
        w.write_all(&blob).map_err(io)?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let io = |e| Error::io("<checkpoint>", e);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(io)?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(Error::Data("not a checkpoint file".into()));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4).map_err(io)?;
        let version = u32::from_le_bytes(b4);
        if version != CHECKPOINT_VERSION {
            return Err(Error::Data(format!("unsupported checkpoint version {version}")));
        }
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8).map_err(io)?;
        let len = usize::try_from(u64::from_le_bytes(b8)).map_err(|_| Error::Data("header too large".into()))?;
        let mut json = vec![0u8; len];
        r.read_exact(&mut json).map_err(io)?;
        let mut ckpt: Checkpoint = serde_json::from_slice(&json)?;
        for t in ckpt.model.all_tensors_mut() {
            let n: usize = t.shape().iter().product();
            let mut raw = vec![0u8; n * 8];
            r.read_exact(&mut raw).map_err(io)?;
            let data = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect();
            *t = Tensor::new(t.shape().to_vec(), data)?;
        }
        Ok(ckpt)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(f);
        self.write_to(&mut w)?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(std::io::BufReader::new(f))
    }
}

fn stripped(shape: &[usize]) -> Tensor {
    // header tensors keep their shape and drop their values
    serde_json::from_value(serde_json::json!({ "shape": shape, "data": [] })).expect("tensor json")
}
