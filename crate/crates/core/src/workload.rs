//! Matmul traces for one transformer layer.

use alloc::vec::Vec;

use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelSpec {
    pub d_model: u64,
    pub n_heads: u64,
    pub head_dim: u64,
    pub mlp_ratio: u64,
    pub bytes_per_element: u64,
    pub n_layers: u64,
}

impl ModelSpec {
    /// One GPT-3 175B layer in 16-bit precision.
    pub const fn gpt3() -> Self {
        ModelSpec { d_model: 12288, n_heads: 96, head_dim: 128, mlp_ratio: 4, bytes_per_element: 2, n_layers: 1 }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.d_model == 0
            || self.n_heads == 0
            || self.head_dim == 0
            || self.mlp_ratio == 0
            || self.bytes_per_element == 0
            || self.n_layers == 0
        {
            return Err(Error::InvalidModel("all fields must be positive"));
        }
        if self.n_heads * self.head_dim != self.d_model {
            return Err(Error::InvalidModel("n_heads * head_dim != d_model"));
        }
        Ok(())
    }

    /// Weight elements of one layer (QKV, MLP up, MLP down).
    pub fn weight_elements(&self) -> u64 {
        let d = self.d_model;
        d * 3 * d + 2 * d * self.mlp_ratio * d
    }
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self::gpt3()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InferenceRequest {
    pub batch: u64,
    pub prompt_len: u64,
    pub gen_tokens: u64,
}

impl InferenceRequest {
    pub fn validate(&self) -> Result<(), Error> {
        if self.batch == 0 {
            return Err(Error::InvalidRequest("batch must be at least 1"));
        }
        if self.prompt_len == 0 {
            return Err(Error::InvalidRequest("zero-token prompt"));
        }
        Ok(())
    }
}

impl Default for InferenceRequest {
    fn default() -> Self {
        InferenceRequest { batch: 8, prompt_len: 2048, gen_tokens: 16 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MatmulDims {
    pub m: u64,
    pub k: u64,
    pub n: u64,
    /// The K x N operand is a model weight rather than an activation.
    pub weight_resident: bool,
}

impl MatmulDims {
    pub const fn new(m: u64, k: u64, n: u64, weight_resident: bool) -> Self {
        MatmulDims { m, k, n, weight_resident }
    }

    pub fn macs(&self) -> u64 {
        self.m * self.k * self.n
    }
}

pub fn flops_of(m: &MatmulDims) -> u64 {
    2 * m.macs()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Phase {
    Prefill,
    Decode,
}

impl Phase {
    pub const ALL: [Phase; 2] = [Phase::Prefill, Phase::Decode];

    pub fn name(self) -> &'static str {
        match self {
            Phase::Prefill => "prefill",
            Phase::Decode => "decode",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sublayer {
    Qkv,
    AttnScore,
    AttnOutput,
    MlpUp,
    MlpDown,
}

/// `count` identical matmuls.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatmulGroup {
    pub sublayer: Sublayer,
    pub dims: MatmulDims,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhaseTrace {
    pub phase: Phase,
    pub kv_len: u64,
    pub groups: Vec<MatmulGroup>,
}

impl PhaseTrace {
    pub fn flops(&self) -> u64 {
        self.groups.iter().map(|g| flops_of(&g.dims) * g.count).sum()
    }

    pub fn macs(&self) -> u64 {
        self.groups.iter().map(|g| g.dims.macs() * g.count).sum()
    }

    pub fn group(&self, sublayer: Sublayer) -> &MatmulGroup {
        self.groups.iter().find(|g| g.sublayer == sublayer).expect("every trace has all five sublayers")
    }

    /// Elements of weight-resident operands touched by the trace.
    pub fn weight_elements(&self) -> u64 {
        self.groups.iter().filter(|g| g.dims.weight_resident).map(|g| g.dims.k * g.dims.n * g.count).sum()
    }
}

fn layer(model: &ModelSpec, phase: Phase, kv_len: u64, rows: u64, q_rows: u64, bh: u64) -> PhaseTrace {
    let d = model.d_model;
    let hd = model.head_dim;
    let l = model.n_layers;
    let ff = model.mlp_ratio * d;
    let groups = alloc::vec![
        MatmulGroup { sublayer: Sublayer::Qkv, dims: MatmulDims::new(rows, d, 3 * d, true), count: l },
        MatmulGroup { sublayer: Sublayer::AttnScore, dims: MatmulDims::new(q_rows, hd, kv_len, false), count: bh * l },
        MatmulGroup { sublayer: Sublayer::AttnOutput, dims: MatmulDims::new(q_rows, kv_len, hd, false), count: bh * l },
        MatmulGroup { sublayer: Sublayer::MlpUp, dims: MatmulDims::new(rows, d, ff, true), count: l },
        MatmulGroup { sublayer: Sublayer::MlpDown, dims: MatmulDims::new(rows, ff, d, true), count: l },
    ];
    PhaseTrace { phase, kv_len, groups }
}

pub fn build_prefill_trace(model: &ModelSpec, req: &InferenceRequest) -> Result<PhaseTrace, Error> {
    model.validate()?;
    req.validate()?;
    let p = req.prompt_len;
    Ok(layer(model, Phase::Prefill, p, req.batch * p, p, req.batch * model.n_heads))
}

pub fn build_decode_trace(model: &ModelSpec, req: &InferenceRequest, step: u64) -> Result<PhaseTrace, Error> {
    model.validate()?;
    req.validate()?;
    if step >= req.gen_tokens {
        return Err(Error::StepOutOfRange { step, gen_tokens: req.gen_tokens });
    }
    Ok(layer(model, Phase::Decode, req.prompt_len + step, req.batch, 1, req.batch * model.n_heads))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> ModelSpec {
        ModelSpec { d_model: 4, n_heads: 2, head_dim: 2, mlp_ratio: 4, bytes_per_element: 2, n_layers: 1 }
    }

    fn req(batch: u64, prompt_len: u64, gen_tokens: u64) -> InferenceRequest {
        InferenceRequest { batch, prompt_len, gen_tokens }
    }

    #[test]
    fn toy_prefill_shapes() {
        let t = build_prefill_trace(&toy(), &req(1, 2, 0)).unwrap();
        let dims: Vec<_> = t.groups.iter().map(|g| (g.dims.m, g.dims.k, g.dims.n, g.count)).collect();
        assert_eq!(dims, [(2, 4, 12, 1), (2, 2, 2, 2), (2, 2, 2, 2), (2, 4, 16, 1), (2, 16, 4, 1)]);
        assert_eq!(t.kv_len, 2);
        assert!(t.group(Sublayer::Qkv).dims.weight_resident);
        assert!(!t.group(Sublayer::AttnScore).dims.weight_resident);
    }

    #[test]
    fn gpt3_prefill_qkv() {
        let t = build_prefill_trace(&ModelSpec::gpt3(), &InferenceRequest::default()).unwrap();
        assert_eq!(t.group(Sublayer::Qkv).dims, MatmulDims::new(16384, 12288, 36864, true));
        assert_eq!(t.group(Sublayer::AttnScore).count, 8 * 96);
    }

    #[test]
    fn prefill_ignores_gen_tokens() {
        let a = build_prefill_trace(&toy(), &req(1, 2, 0)).unwrap();
        let b = build_prefill_trace(&toy(), &req(1, 2, 9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_token_prompt_rejected() {
        assert!(build_prefill_trace(&toy(), &req(1, 0, 0)).is_err());
        assert!(build_prefill_trace(&toy(), &req(0, 2, 0)).is_err());
    }

    #[test]
    fn decode_kv_grows() {
        let m = ModelSpec::gpt3();
        let r = InferenceRequest::default();
        let t0 = build_decode_trace(&m, &r, 0).unwrap();
        let t5 = build_decode_trace(&m, &r, 5).unwrap();
        assert_eq!(t0.group(Sublayer::AttnScore).dims.n, 2048);
        assert_eq!(t5.group(Sublayer::AttnScore).dims.n, 2053);
        assert_eq!(t5.group(Sublayer::AttnOutput).dims.k, 2053);
        assert_eq!(t5.kv_len, 2053);
        assert_eq!(t0.group(Sublayer::MlpUp).dims, MatmulDims::new(8, 12288, 49152, true));
    }

    #[test]
    fn toy_decode_score() {
        let t = build_decode_trace(&toy(), &req(1, 2, 1), 0).unwrap();
        let g = t.group(Sublayer::AttnScore);
        assert_eq!((g.dims.m, g.dims.k, g.dims.n, g.count), (1, 2, 2, 2));
    }

    #[test]
    fn decode_step_range() {
        assert_eq!(build_decode_trace(&toy(), &req(1, 2, 3), 3), Err(Error::StepOutOfRange { step: 3, gen_tokens: 3 }));
    }

    #[test]
    fn flops() {
        assert_eq!(flops_of(&MatmulDims::new(1, 1, 1, true)), 2);
        assert_eq!(flops_of(&MatmulDims::new(2, 2, 2, true)), 16);
        assert_eq!(flops_of(&MatmulDims::new(16384, 12288, 36864, true)), 2 * 16384 * 12288 * 36864);
    }

    #[test]
    fn layers_scale_counts() {
        let mut m = toy();
        m.n_layers = 3;
        let t = build_prefill_trace(&m, &req(1, 2, 0)).unwrap();
        let one = build_prefill_trace(&toy(), &req(1, 2, 0)).unwrap();
        assert_eq!(t.flops(), 3 * one.flops());
    }

    #[test]
    fn invalid_model() {
        let mut m = toy();
        m.head_dim = 3;
        assert!(m.validate().is_err());
    }
}
