use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use super::layers::{DenseLayer, DropoutSpec, LayerRecord, MaskedKernel, MaskedSparseLayer, ParamId, Parameter};
use crate::error::{Error, Result};
use crate::genegraph::AdjacencyMask;
use crate::numcore::{Activation, DropoutKind, Matrix, RngStream};

/// Input modalities the network consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    GeneOnly,
    ImageOnly,
    Fused,
}

impl Variant {
    pub fn uses_genes(self) -> bool {
        matches!(self, Variant::GeneOnly | Variant::Fused)
    }

    pub fn uses_image(self) -> bool {
        matches!(self, Variant::ImageOnly | Variant::Fused)
    }
}

/// Output heads attached to the shared representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Heads {
    Survival,
    Grade,
    Both,
}

impl Heads {
    pub fn survival(self) -> bool {
        matches!(self, Heads::Survival | Heads::Both)
    }

    pub fn grade(self) -> bool {
        matches!(self, Heads::Grade | Heads::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub variant: Variant,
    pub heads: Heads,
    /// Number of genes `p` (0 when the gene branch is absent).
    pub gene_dim: usize,
    /// Width of precomputed image embeddings (0 when absent).
    pub image_dim: usize,
    pub grade_classes: usize,
    /// Width the gene branch compresses to before the trunk.
    pub gene_repr_dim: usize,
    /// Hidden and output widths of the shared trunk; the last entry is the
    /// shared representation both heads read.
    pub trunk_dims: Vec<usize>,
    pub head_hidden: usize,
    pub gene_activation: Activation,
    pub gene_dropout: DropoutKind,
    pub trunk_activation: Activation,
    pub trunk_dropout: DropoutKind,
    pub head_activation: Activation,
    pub dropout_p: f64,
}

impl NetworkConfig {
    /// Defaults for a variant: gene path 1000-wide with SELU and alpha dropout;
    /// fused trunk 512→128→32 with ReLU; gene-only trunk keeps SELU so the
    /// masked layer is followed by four SELU layers ending at 32; image-only
    /// compresses 1000→512→256→128→32.
    pub fn new(variant: Variant, heads: Heads, gene_dim: usize, grade_classes: usize) -> Self {
        let (trunk_dims, trunk_activation, trunk_dropout) = match variant {
            Variant::Fused => (vec![512, 128, 32], Activation::Relu, DropoutKind::Standard),
            Variant::GeneOnly => (vec![512, 128, 32], Activation::Selu, DropoutKind::Alpha),
            Variant::ImageOnly => (vec![512, 256, 128, 32], Activation::Relu, DropoutKind::Standard),
        };
        NetworkConfig {
            variant,
            heads,
            gene_dim: if variant.uses_genes() { gene_dim } else { 0 },
            image_dim: if variant.uses_image() { 1000 } else { 0 },
            grade_classes,
            gene_repr_dim: 1000,
            trunk_dims,
            head_hidden: 16,
            gene_activation: Activation::Selu,
            gene_dropout: DropoutKind::Alpha,
            trunk_activation,
            trunk_dropout,
            head_activation: Activation::Relu,
            dropout_p: 0.25,
        }
    }

    pub fn with_image_dim(mut self, dim: usize) -> Self {
        if self.variant.uses_image() {
            self.image_dim = dim;
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.variant.uses_genes() && self.gene_dim == 0 {
            return bad("gene branch requires gene_dim > 0");
        }
        if self.variant.uses_image() && self.image_dim == 0 {
            return bad("image branch requires image_dim > 0");
        }
        if !self.variant.uses_genes() && self.gene_dim != 0 {
            return bad("gene_dim must be 0 without a gene branch");
        }
        if !self.variant.uses_image() && self.image_dim != 0 {
            return bad("image_dim must be 0 without an image branch");
        }
        if self.heads.grade() && self.grade_classes < 2 {
            return bad("grade head needs at least 2 classes");
        }
        if self.trunk_dims.is_empty() || self.trunk_dims.contains(&0) {
            return bad("trunk_dims must be non-empty and positive");
        }
        if self.gene_repr_dim == 0 || self.head_hidden == 0 {
            return bad("layer widths must be positive");
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return bad("dropout_p must lie in [0, 1)");
        }
        for act in [self.gene_activation, self.trunk_activation, self.head_activation] {
            if matches!(act, Activation::LogSoftmaxRows | Activation::Sigmoid) {
                return bad("hidden activations must be identity, relu or selu");
            }
        }
        Ok(())
    }

    /// Width of the shared representation feeding the heads.
    pub fn representation_dim(&self) -> usize {
        *self.trunk_dims.last().unwrap_or(&0)
    }

    fn trunk_input_dim(&self) -> usize {
        let gene = if self.variant.uses_genes() { self.gene_repr_dim } else { 0 };
        gene + self.image_dim
    }
}

/// Inputs for one batch. Rows of both matrices must refer to the same samples.
#[derive(Debug, Clone, Copy, Default)]
pub struct ModelInput<'a> {
    pub expression: Option<&'a Matrix>,
    pub image: Option<&'a Matrix>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelOutput {
    /// `n×1` risks in (0, 1).
    pub risk: Option<Matrix>,
    /// `n×k` log-probabilities.
    pub log_probs: Option<Matrix>,
}

/// Cached forward state for one batch; consumed by [`Network::backward`].
#[derive(Debug)]
pub struct ForwardTrace {
    network_id: u64,
    version: u64,
    rows: usize,
    gene_sparse: Option<LayerRecord>,
    gene_dense: Option<LayerRecord>,
    trunk: Vec<LayerRecord>,
    survival: Vec<LayerRecord>,
    grade: Vec<LayerRecord>,
}

impl ForwardTrace {
    pub fn rows(&self) -> usize {
        self.rows
    }
}

/// Per-parameter gradients aligned with the registry; `None` marks parameters
/// the selected loss does not reach.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub grads: Vec<Option<Matrix>>,
}

impl Gradients {
    pub fn get(&self, id: ParamId) -> Option<&Matrix> {
        self.grads[id].as_ref()
    }
}

static NEXT_NETWORK_ID: AtomicU64 = AtomicU64::new(1);

/// An assembled model with its parameter registry.
#[derive(Debug)]
pub struct Network {
    config: NetworkConfig,
    params: Vec<Parameter>,
    gene_sparse: Option<MaskedSparseLayer>,
    gene_dense: Option<DenseLayer>,
    trunk: Vec<DenseLayer>,
    survival: Vec<DenseLayer>,
    grade: Vec<DenseLayer>,
    id: u64,
    version: u64,
}

impl Clone for Network {
    fn clone(&self) -> Self {
        Network {
            config: self.config.clone(),
            params: self.params.clone(),
            gene_sparse: self.gene_sparse.clone(),
            gene_dense: self.gene_dense.clone(),
            trunk: self.trunk.clone(),
            survival: self.survival.clone(),
            grade: self.grade.clone(),
            id: NEXT_NETWORK_ID.fetch_add(1, Ordering::Relaxed),
            version: 0,
        }
    }
}

/// How a freshly declared parameter is initialized.
enum Init {
    Zeros,
    /// `U(−b, b)` with `b = √(6/(fan_in+fan_out))`.
    Xavier {
        fan_in: usize,
        fan_out: usize,
    },
    /// Xavier bound per sparse entry from the mask's row and column counts.
    MaskedXavier {
        bounds: Vec<f64>,
    },
}

struct Builder {
    params: Vec<Parameter>,
    inits: Vec<Init>,
}

impl Builder {
    fn declare(&mut self, name: String, rows: usize, cols: usize, init: Init) -> ParamId {
        self.params.push(Parameter { name, value: Matrix::zeros(rows, cols) });
        self.inits.push(init);
        self.params.len() - 1
    }

    fn dense(
        &mut self,
        prefix: &str,
        in_dim: usize,
        out_dim: usize,
        activation: Activation,
        dropout: DropoutSpec,
    ) -> DenseLayer {
        let weight = self.declare(
            format!("{prefix}.weight"),
            in_dim,
            out_dim,
            Init::Xavier { fan_in: in_dim, fan_out: out_dim },
        );
        let bias = self.declare(format!("{prefix}.bias"), 1, out_dim, Init::Zeros);
        DenseLayer { weight, bias, activation, dropout, in_dim, out_dim }
    }
}

impl Network {
    /// Builds the layer layout for `config` and initializes every parameter
    /// from `rng` in registry order.
    pub fn assemble(config: NetworkConfig, mask: Option<AdjacencyMask>, rng: &mut RngStream) -> Result<Self> {
        let (mut net, inits) = Self::layout(config, mask)?;
        for (param, init) in net.params.iter_mut().zip(inits) {
            let values = param.value.as_mut_slice();
            match init {
                Init::Zeros => {}
                Init::Xavier { fan_in, fan_out } => {
                    let b = (6.0 / (fan_in + fan_out) as f64).sqrt();
                    values.iter_mut().for_each(|v| *v = rng.uniform_range(-b, b));
                }
                Init::MaskedXavier { bounds } => {
                    for (v, b) in values.iter_mut().zip(bounds) {
                        *v = rng.uniform_range(-b, b);
                    }
                }
            }
        }
        Ok(net)
    }

    /// Builds the layout and takes parameter values from `values`, matched by
    /// registry name and shape.
    pub fn from_parameters(config: NetworkConfig, mask: Option<AdjacencyMask>, values: Vec<Parameter>) -> Result<Self> {
        let (mut net, _) = Self::layout(config, mask)?;
        if values.len() != net.params.len() {
            return Err(Error::Config(format!(
                "{} parameters supplied, layout has {}",
                values.len(),
                net.params.len()
            )));
        }
        for (slot, given) in net.params.iter_mut().zip(values) {
            if slot.name != given.name || slot.value.shape() != given.value.shape() {
                return Err(Error::Config(format!(
                    "parameter {} {:?} does not match layout entry {} {:?}",
                    given.name,
                    given.value.shape(),
                    slot.name,
                    slot.value.shape()
                )));
            }
            if !given.value.is_finite() {
                return Err(Error::Numeric { context: format!("parameter {}", given.name) });
            }
            slot.value = given.value;
        }
        Ok(net)
    }

    fn layout(config: NetworkConfig, mask: Option<AdjacencyMask>) -> Result<(Self, Vec<Init>)> {
        config.validate()?;
        let mut b = Builder { params: Vec::new(), inits: Vec::new() };
        let gene_drop = DropoutSpec { kind: config.gene_dropout, p: config.dropout_p };
        let trunk_drop = DropoutSpec { kind: config.trunk_dropout, p: config.dropout_p };

        let (gene_sparse, gene_dense) = match (config.variant.uses_genes(), mask) {
            (true, Some(mask)) => {
                if mask.dim() != config.gene_dim {
                    return Err(Error::Config(format!(
                        "mask dim {} does not match gene_dim {}",
                        mask.dim(),
                        config.gene_dim
                    )));
                }
                let counts = mask.column_counts();
                // Symmetric mask: the row count of r equals the column count of r.
                let bounds =
                    mask.coords().iter().map(|&(r, c)| (6.0 / (counts[c] + counts[r]) as f64).sqrt()).collect();
                let weight = b.declare("gene.sparse.weight".into(), 1, mask.nnz(), Init::MaskedXavier { bounds });
                let sparse = MaskedSparseLayer { mask, weight, activation: config.gene_activation, dropout: gene_drop };
                let dense =
                    b.dense("gene.dense", config.gene_dim, config.gene_repr_dim, config.gene_activation, gene_drop);
                (Some(sparse), Some(dense))
            }
            (true, None) => return Err(Error::Config("gene branch requires an adjacency mask".into())),
            (false, Some(_)) => return Err(Error::Config("mask supplied for a variant without a gene branch".into())),
            (false, None) => (None, None),
        };

        let mut trunk = Vec::new();
        let mut width = config.trunk_input_dim();
        let last = config.trunk_dims.len() - 1;
        for (i, &out) in config.trunk_dims.iter().enumerate() {
            // The shared representation itself is not dropped out.
            let drop = if i == last { DropoutSpec::NONE } else { trunk_drop };
            trunk.push(b.dense(&format!("trunk.{i}"), width, out, config.trunk_activation, drop));
            width = out;
        }

        let mut survival = Vec::new();
        if config.heads.survival() {
            survival.push(b.dense("survival.0", width, config.head_hidden, config.head_activation, DropoutSpec::NONE));
            survival.push(b.dense("survival.1", config.head_hidden, 1, Activation::Sigmoid, DropoutSpec::NONE));
        }
        let mut grade = Vec::new();
        if config.heads.grade() {
            grade.push(b.dense("grade.0", width, config.head_hidden, config.head_activation, DropoutSpec::NONE));
            grade.push(b.dense(
                "grade.1",
                config.head_hidden,
                config.grade_classes,
                Activation::LogSoftmaxRows,
                DropoutSpec::NONE,
            ));
        }

        let net = Network {
            config,
            params: b.params,
            gene_sparse,
            gene_dense,
            trunk,
            survival,
            grade,
            id: NEXT_NETWORK_ID.fetch_add(1, Ordering::Relaxed),
            version: 0,
        };
        Ok((net, b.inits))
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn mask(&self) -> Option<&AdjacencyMask> {
        self.gene_sparse.as_ref().map(|l| &l.mask)
    }

    pub fn params(&self) -> &[Parameter] {
        &self.params
    }

    pub fn param_names(&self) -> Vec<&str> {
        self.params.iter().map(|p| p.name.as_str()).collect()
    }

    pub fn param_index(&self, name: &str) -> Option<ParamId> {
        self.params.iter().position(|p| p.name == name)
    }

    /// Mutable access to one parameter. Invalidates outstanding traces.
    pub fn param_mut(&mut self, id: ParamId) -> &mut Matrix {
        self.version += 1;
        &mut self.params[id].value
    }

    /// Mutable access to all parameters. Invalidates outstanding traces.
    pub fn params_mut(&mut self) -> &mut [Parameter] {
        self.version += 1;
        &mut self.params
    }

    pub fn parameter_count(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    pub fn gene_layer(&self) -> Option<&MaskedSparseLayer> {
        self.gene_sparse.as_ref()
    }

    /// Training-mode forward: dropout masks drawn from `rng`.
    pub fn forward_train(&self, input: ModelInput<'_>, rng: &mut RngStream) -> Result<(ModelOutput, ForwardTrace)> {
        self.run(input, Some(rng), MaskedKernel::Sparse)
    }

    /// Evaluation-mode forward with a trace (dropout off).
    pub fn forward_eval(&self, input: ModelInput<'_>) -> Result<(ModelOutput, ForwardTrace)> {
        self.run(input, None, MaskedKernel::Sparse)
    }

    /// Evaluation-mode outputs.
    pub fn predict(&self, input: ModelInput<'_>) -> Result<ModelOutput> {
        Ok(self.run(input, None, MaskedKernel::Sparse)?.0)
    }

    /// Evaluation-mode outputs with the masked layer computed densely as
    /// `x·(A⊙W)` from the supplied `p×p` weights. Entries of `dense_weights`
    /// outside the mask are multiplied by zero.
    pub fn predict_dense_reference(&self, input: ModelInput<'_>, dense_weights: &Matrix) -> Result<ModelOutput> {
        Ok(self.run(input, None, MaskedKernel::DenseReference(dense_weights))?.0)
    }

    fn run(
        &self,
        input: ModelInput<'_>,
        mut rng: Option<&mut RngStream>,
        kernel: MaskedKernel<'_>,
    ) -> Result<(ModelOutput, ForwardTrace)> {
        let cfg = &self.config;
        let rows = self.check_input(&input)?;

        let mut gene_sparse_rec = None;
        let mut gene_dense_rec = None;
        let gene_repr = match (&self.gene_sparse, &self.gene_dense, input.expression) {
            (Some(sparse), Some(dense), Some(x)) => {
                let (h, rec) = sparse.forward(&self.params, x.clone(), rng.as_deref_mut(), kernel)?;
                gene_sparse_rec = Some(rec);
                let (z, rec) = dense.forward(&self.params, h, rng.as_deref_mut())?;
                gene_dense_rec = Some(rec);
                Some(z)
            }
            _ => None,
        };

        // Image block first, gene block second.
        let mut z = match (input.image.filter(|_| cfg.variant.uses_image()), gene_repr) {
            (Some(img), Some(g)) => img.hconcat(&g)?,
            (Some(img), None) => img.clone(),
            (None, Some(g)) => g,
            (None, None) => unreachable!("check_input guarantees a modality"),
        };

        let mut trunk_recs = Vec::with_capacity(self.trunk.len());
        for layer in &self.trunk {
            let (out, rec) = layer.forward(&self.params, z, rng.as_deref_mut())?;
            trunk_recs.push(rec);
            z = out;
        }

        let run_head = |layers: &[DenseLayer]| -> Result<(Option<Matrix>, Vec<LayerRecord>)> {
            if layers.is_empty() {
                return Ok((None, Vec::new()));
            }
            let mut h = z.clone();
            let mut recs = Vec::with_capacity(layers.len());
            for layer in layers {
                let (out, rec) = layer.forward(&self.params, h, None)?;
                recs.push(rec);
                h = out;
            }
            Ok((Some(h), recs))
        };
        let (risk, survival_recs) = run_head(&self.survival)?;
        let (log_probs, grade_recs) = run_head(&self.grade)?;

        Ok((
            ModelOutput { risk, log_probs },
            ForwardTrace {
                network_id: self.id,
                version: self.version,
                rows,
                gene_sparse: gene_sparse_rec,
                gene_dense: gene_dense_rec,
                trunk: trunk_recs,
                survival: survival_recs,
                grade: grade_recs,
            },
        ))
    }

    fn check_input(&self, input: &ModelInput<'_>) -> Result<usize> {
        let cfg = &self.config;
        let mut rows = None;
        if cfg.variant.uses_genes() {
            let x = input.expression.ok_or_else(|| Error::dim("forward", "variant needs an expression matrix"))?;
            if x.cols() != cfg.gene_dim {
                return Err(Error::dim("forward", format!("expression width {} expected {}", x.cols(), cfg.gene_dim)));
            }
            rows = Some(x.rows());
        }
        if cfg.variant.uses_image() {
            let x = input.image.ok_or_else(|| Error::dim("forward", "variant needs an image embedding matrix"))?;
            if x.cols() != cfg.image_dim {
                return Err(Error::dim("forward", format!("image width {} expected {}", x.cols(), cfg.image_dim)));
            }
            if let Some(n) = rows {
                if n != x.rows() {
                    return Err(Error::dim("forward", format!("{n} expression rows vs {} image rows", x.rows())));
                }
            }
            rows = Some(x.rows());
        }
        Ok(rows.unwrap_or(0))
    }

    /// Gene-branch representation `σ(σ(x·(A⊙W₁))·W₂)` in evaluation mode.
    pub fn sgcn_forward(&self, x: &Matrix) -> Result<Matrix> {
        let (Some(sparse), Some(dense)) = (&self.gene_sparse, &self.gene_dense) else {
            return Err(Error::Usage("network has no gene branch".into()));
        };
        if x.cols() != self.config.gene_dim {
            return Err(Error::dim(
                "sgcn_forward",
                format!("input width {} expected {}", x.cols(), self.config.gene_dim),
            ));
        }
        let (h, _) = sparse.forward(&self.params, x.clone(), None, MaskedKernel::Sparse)?;
        Ok(dense.forward(&self.params, h, None)?.0)
    }

    /// Concatenates the available branch outputs (image first) and runs the
    /// trunk in evaluation mode.
    pub fn fusion_forward(&self, image: Option<&Matrix>, gene_repr: Option<&Matrix>) -> Result<Matrix> {
        let mut z = match (image, gene_repr) {
            (Some(a), Some(b)) => a.hconcat(b)?,
            (Some(a), None) => a.clone(),
            (None, Some(b)) => b.clone(),
            (None, None) => return Err(Error::Usage("fusion needs at least one branch".into())),
        };
        if z.cols() != self.config.trunk_input_dim() {
            return Err(Error::dim(
                "fusion_forward",
                format!("trunk input width {} expected {}", z.cols(), self.config.trunk_input_dim()),
            ));
        }
        for layer in &self.trunk {
            z = layer.forward(&self.params, z, None)?.0;
        }
        Ok(z)
    }

    fn head_forward(&self, layers: &[DenseLayer], z: &Matrix, what: &str) -> Result<Matrix> {
        if layers.is_empty() {
            return Err(Error::Usage(format!("network has no {what} head")));
        }
        if z.cols() != layers[0].in_dim {
            return Err(Error::dim(
                "head",
                format!("{what} head input width {} expected {}", z.cols(), layers[0].in_dim),
            ));
        }
        let mut h = z.clone();
        for layer in layers {
            h = layer.forward(&self.params, h, None)?.0;
        }
        Ok(h)
    }

    /// `n×1` risks from the shared representation.
    pub fn survival_head(&self, repr: &Matrix) -> Result<Matrix> {
        self.head_forward(&self.survival, repr, "survival")
    }

    /// `n×k` log-probabilities from the shared representation.
    pub fn grade_head(&self, repr: &Matrix) -> Result<Matrix> {
        self.head_forward(&self.grade, repr, "grade")
    }

    /// Backpropagates the supplied output gradients; a head whose gradient is
    /// `None` contributes nothing and its parameters are reported as `None`.
    pub fn backward(
        &self,
        trace: ForwardTrace,
        d_risk: Option<&Matrix>,
        d_log_probs: Option<&Matrix>,
    ) -> Result<Gradients> {
        if trace.network_id != self.id || trace.version != self.version {
            return Err(Error::Usage("forward trace is stale or belongs to another network".into()));
        }
        if d_risk.is_none() && d_log_probs.is_none() {
            return Err(Error::Usage("backward needs at least one output gradient".into()));
        }
        let mut grads: Vec<Option<Matrix>> = vec![None; self.params.len()];
        let repr_dim = self.config.representation_dim();
        let mut d_repr = Matrix::zeros(trace.rows, repr_dim);

        let mut head =
            |layers: &[DenseLayer], recs: &[LayerRecord], upstream: Option<&Matrix>, what: &str| -> Result<()> {
                let Some(g) = upstream else { return Ok(()) };
                if layers.is_empty() {
                    return Err(Error::Usage(format!("network has no {what} head")));
                }
                let out_shape = recs.last().expect("head ran").activated().shape();
                if g.shape() != out_shape {
                    return Err(Error::dim(
                        "backward",
                        format!("{what} gradient {:?} for output {:?}", g.shape(), out_shape),
                    ));
                }
                let mut g = g.clone();
                for (layer, rec) in layers.iter().zip(recs).rev() {
                    let (dx, dw, db) = layer.backward(&self.params, rec, &g)?;
                    grads[layer.weight] = Some(dw);
                    grads[layer.bias] = Some(db);
                    g = dx;
                }
                d_repr = d_repr.add(&g)?;
                Ok(())
            };
        head(&self.survival, &trace.survival, d_risk, "survival")?;
        head(&self.grade, &trace.grade, d_log_probs, "grade")?;

        let mut g = d_repr;
        for (layer, rec) in self.trunk.iter().zip(&trace.trunk).rev() {
            let (dx, dw, db) = layer.backward(&self.params, rec, &g)?;
            grads[layer.weight] = Some(dw);
            grads[layer.bias] = Some(db);
            g = dx;
        }

        if let (Some(sparse), Some(dense), Some(sparse_rec), Some(dense_rec)) =
            (&self.gene_sparse, &self.gene_dense, &trace.gene_sparse, &trace.gene_dense)
        {
            // Gene block sits to the right of the image block.
            let g_gene = if self.config.variant.uses_image() { g.hsplit(self.config.image_dim)?.1 } else { g };
            let (dh, dw, db) = dense.backward(&self.params, dense_rec, &g_gene)?;
            grads[dense.weight] = Some(dw);
            grads[dense.bias] = Some(db);
            let (_, dws) = sparse.backward(&self.params, sparse_rec, &dh)?;
            grads[sparse.weight] = Some(dws);
        }
        Ok(Gradients { grads })
    }
}
