//! Joint X/Z sum-product decoding over `q`-ary segments.
//!
//! The X side has one check per `H_Δ` row, `Σ_j δ_ij ξ_j = σ_i`. The Z side has
//! one per `H_Γ` row, `Σ_j γ_ij ζ_j = τ_i`. The two sides exchange information
//! through the depolarizing prior. Messages live on edges and are indexed by
//! an edge-local symbol index. In [`ConstraintForm::FieldSymbols`] that index is
//! the field element (with `x_j = w(ξ_j)`). In [`ConstraintForm::BinaryBlocks`]
//! it is the raw bit pattern, constrained by companion blocks.

pub mod kernels;

use crate::binimage::CssCode;
use crate::channel::{ChannelError, PriorTable};
use crate::gf2e::{FieldElem, FieldTables, Side};
use crate::registry::UnknownStrategy;
use kernels::{check_kernels, coupling_kernels, normalize, CheckKernel, CouplingCtx, CouplingKernel};

pub const DEFAULT_MAX_ITER: usize = 90;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConstraintForm {
    #[default]
    FieldSymbols,
    BinaryBlocks,
}

/// Belief used for the per-segment hard decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HardDecision {
    /// `argmax Π_i ν_ij`: the product of check messages only.
    #[default]
    CheckProduct,
    /// `argmax κ_j Π_i ν_ij`: the full approximate posterior.
    Posterior,
}

impl std::str::FromStr for HardDecision {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "check-product" => Ok(Self::CheckProduct),
            "posterior" => Ok(Self::Posterior),
            _ => Err(format!("unknown hard decision {s:?}; expected check-product or posterior")),
        }
    }
}

/// One side of the Tanner graph in compressed form. Edges are numbered in check order.
#[derive(Debug, Clone)]
pub struct SideGraph {
    nvars: usize,
    check_ptr: Vec<usize>,
    edge_var: Vec<u32>,
    /// label exponent per edge
    edge_label: Vec<u32>,
    var_ptr: Vec<usize>,
    var_edges: Vec<u32>,
}

impl SideGraph {
    /// `checks[i]` lists `(variable, label exponent)`.
    fn new(nvars: usize, checks: &[Vec<(usize, u32)>]) -> Self {
        let mut check_ptr = vec![0];
        let mut edge_var = Vec::new();
        let mut edge_label = Vec::new();
        for c in checks {
            for &(v, l) in c {
                assert!(v < nvars, "variable {v} out of range");
                edge_var.push(v as u32);
                edge_label.push(l);
            }
            check_ptr.push(edge_var.len());
        }
        let mut deg = vec![0usize; nvars];
        edge_var.iter().for_each(|&v| deg[v as usize] += 1);
        let mut var_ptr = vec![0usize; nvars + 1];
        for v in 0..nvars {
            var_ptr[v + 1] = var_ptr[v] + deg[v];
        }
        let mut fill = var_ptr.clone();
        let mut var_edges = vec![0u32; edge_var.len()];
        for (e, &v) in edge_var.iter().enumerate() {
            var_edges[fill[v as usize]] = e as u32;
            fill[v as usize] += 1;
        }
        Self { nvars, check_ptr, edge_var, edge_label, var_ptr, var_edges }
    }

    pub fn nchecks(&self) -> usize {
        self.check_ptr.len() - 1
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn nedges(&self) -> usize {
        self.edge_var.len()
    }

    pub fn check_edges(&self, i: usize) -> std::ops::Range<usize> {
        self.check_ptr[i]..self.check_ptr[i + 1]
    }

    pub fn var_edges(&self, j: usize) -> &[u32] {
        &self.var_edges[self.var_ptr[j]..self.var_ptr[j + 1]]
    }

    pub fn edge_var(&self, e: usize) -> usize {
        self.edge_var[e] as usize
    }

    pub fn check_degree(&self, i: usize) -> usize {
        self.check_ptr[i + 1] - self.check_ptr[i]
    }

    pub fn var_degree(&self, j: usize) -> usize {
        self.var_ptr[j + 1] - self.var_ptr[j]
    }
}

/// Both Tanner graphs with their per-label index maps.
#[derive(Debug, Clone)]
pub struct DecoderGraph {
    q: usize,
    form: ConstraintForm,
    x: SideGraph,
    z: SideGraph,
    /// `x_maps[exp * q + a]`: group element contributed by index `a` under label `α^exp`
    x_maps: Vec<u32>,
    z_maps: Vec<u32>,
    /// X index -> x bit pattern
    x_bits: Vec<u32>,
    /// observed X syndrome bits -> group element
    x_syndrome: Vec<u32>,
}

impl DecoderGraph {
    /// `x_checks` carry `δ` exponents, `z_checks` carry `γ` exponents.
    pub fn from_checks(
        field: &FieldTables,
        form: ConstraintForm,
        nvars: usize,
        x_checks: &[Vec<(usize, u32)>],
        z_checks: &[Vec<(usize, u32)>],
    ) -> Self {
        let q = field.order();
        let m = q - 1;
        let mut x_maps = Vec::with_capacity(m * q);
        let mut z_maps = Vec::with_capacity(m * q);
        for exp in 0..m as u32 {
            let label = field.exp_bits(exp);
            let at = field.companion(FieldElem::Pow(exp), Side::Transposed);
            for a in 0..q as u32 {
                x_maps.push(match form {
                    ConstraintForm::FieldSymbols => field.mul_bits(label, a),
                    ConstraintForm::BinaryBlocks => at.mul_vec(a),
                });
                z_maps.push(field.mul_bits(label, a));
            }
        }
        let (x_bits, x_syndrome) = match form {
            ConstraintForm::FieldSymbols => (
                (0..q as u32).map(|a| field.w_of_bits(a)).collect(),
                (0..q as u32).map(|s| field.from_w_bits(s)).collect(),
            ),
            ConstraintForm::BinaryBlocks => ((0..q as u32).collect(), (0..q as u32).collect()),
        };
        Self {
            q,
            form,
            x: SideGraph::new(nvars, x_checks),
            z: SideGraph::new(nvars, z_checks),
            x_maps,
            z_maps,
            x_bits,
            x_syndrome,
        }
    }

    pub fn from_code(code: &CssCode, form: ConstraintForm) -> Self {
        let ext = code.extended();
        let rows = code.block_rows();
        let x_checks: Vec<Vec<(usize, u32)>> = (0..rows).map(|i| ext.delta_row(i).collect()).collect();
        let z_checks: Vec<Vec<(usize, u32)>> = (0..rows).map(|i| ext.gamma_row(i).collect()).collect();
        Self::from_checks(code.field(), form, code.segments(), &x_checks, &z_checks)
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn form(&self) -> ConstraintForm {
        self.form
    }

    pub fn x_side(&self) -> &SideGraph {
        &self.x
    }

    pub fn z_side(&self) -> &SideGraph {
        &self.z
    }

    pub fn nvars(&self) -> usize {
        self.x.nvars
    }

    /// Bit pattern of an X-side index.
    pub fn x_bits_of(&self, index: u32) -> u32 {
        self.x_bits[index as usize]
    }

    fn x_map(&self, e: usize) -> &[u32] {
        let l = self.x.edge_label[e] as usize;
        &self.x_maps[l * self.q..(l + 1) * self.q]
    }

    fn z_map(&self, e: usize) -> &[u32] {
        let l = self.z.edge_label[e] as usize;
        &self.z_maps[l * self.q..(l + 1) * self.q]
    }

    /// Syndrome symbols `(σ, τ)` from the observed bits `(s, t)`.
    pub fn syndrome_symbols(&self, s: &[u32], t: &[u32]) -> (Vec<u32>, Vec<u32>) {
        (s.iter().map(|&b| self.x_syndrome[b as usize]).collect(), t.to_vec())
    }

    /// Checks `Σ fwd(a_j) = σ_i` on the X side for indices `xs`.
    pub fn x_satisfied(&self, xs: &[u32], sigma: &[u32]) -> bool {
        (0..self.x.nchecks()).all(|i| {
            self.x.check_edges(i).fold(0, |acc, e| acc ^ self.x_map(e)[xs[self.x.edge_var(e)] as usize]) == sigma[i]
        })
    }

    pub fn z_satisfied(&self, zs: &[u32], tau: &[u32]) -> bool {
        (0..self.z.nchecks()).all(|i| {
            self.z.check_edges(i).fold(0, |acc, e| acc ^ self.z_map(e)[zs[self.z.edge_var(e)] as usize]) == tau[i]
        })
    }
}

/// The eight message families, all length-`q` probability vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageState {
    q: usize,
    pub mu_x: Vec<f64>,
    pub mu_z: Vec<f64>,
    pub nu_x: Vec<f64>,
    pub nu_z: Vec<f64>,
    pub lam_x: Vec<f64>,
    pub lam_z: Vec<f64>,
    pub kappa_x: Vec<f64>,
    pub kappa_z: Vec<f64>,
}

impl MessageState {
    /// Every message uniform.
    pub fn new(graph: &DecoderGraph) -> Self {
        let q = graph.q;
        let u = 1.0 / q as f64;
        Self {
            q,
            mu_x: vec![u; graph.x.nedges() * q],
            mu_z: vec![u; graph.z.nedges() * q],
            nu_x: vec![u; graph.x.nedges() * q],
            nu_z: vec![u; graph.z.nedges() * q],
            lam_x: vec![u; graph.nvars() * q],
            lam_z: vec![u; graph.nvars() * q],
            kappa_x: vec![u; graph.nvars() * q],
            kappa_z: vec![u; graph.nvars() * q],
        }
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// All families, for invariant checks.
    pub fn families(&self) -> [(&'static str, &[f64]); 8] {
        [
            ("mu_x", &self.mu_x),
            ("mu_z", &self.mu_z),
            ("nu_x", &self.nu_x),
            ("nu_z", &self.nu_z),
            ("lam_x", &self.lam_x),
            ("lam_z", &self.lam_z),
            ("kappa_x", &self.kappa_x),
            ("kappa_z", &self.kappa_z),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeResult {
    pub success: bool,
    /// Estimated `x` segments (bit patterns).
    pub x: Vec<u32>,
    /// Estimated `z` segments (bit patterns).
    pub z: Vec<u32>,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecoderConfig {
    pub max_iter: usize,
    pub check_kernel: String,
    pub coupling: String,
    pub form: ConstraintForm,
    pub hard_decision: HardDecision,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        Self {
            max_iter: DEFAULT_MAX_ITER,
            check_kernel: "wht".into(),
            coupling: "factorized".into(),
            form: ConstraintForm::FieldSymbols,
            hard_decision: HardDecision::default(),
        }
    }
}

/// Prior and coupling data for one channel parameter.
#[derive(Debug, Clone)]
pub struct ChannelModel {
    ctx: CouplingCtx,
}

impl ChannelModel {
    pub fn p_d(&self) -> f64 {
        self.ctx.p_d
    }
}

/// A sum-product decoder bound to one graph.
pub struct Decoder {
    graph: DecoderGraph,
    check: Box<dyn CheckKernel>,
    coupling: Box<dyn CouplingKernel>,
    config: DecoderConfig,
}

impl std::fmt::Debug for Decoder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Decoder")
            .field("check", &self.check.name())
            .field("coupling", &self.coupling.name())
            .field("config", &self.config)
            .finish()
    }
}

/// Reusable buffers for one decode.
#[derive(Debug, Default)]
pub struct Workspace {
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
}

impl Decoder {
    pub fn new(code: &CssCode, config: DecoderConfig) -> Result<Self, UnknownStrategy> {
        Self::with_graph(DecoderGraph::from_code(code, config.form), config)
    }

    pub fn with_graph(graph: DecoderGraph, config: DecoderConfig) -> Result<Self, UnknownStrategy> {
        let check = check_kernels().create(&config.check_kernel)?;
        let coupling = coupling_kernels().create(&config.coupling)?;
        Ok(Self { graph, check, coupling, config })
    }

    pub fn graph(&self) -> &DecoderGraph {
        &self.graph
    }

    pub fn config(&self) -> &DecoderConfig {
        &self.config
    }

    /// Prior for `p_D`, indexed to match the graph's X-side symbols.
    pub fn channel(&self, p_d: f64) -> Result<ChannelModel, ChannelError> {
        let e = self.graph.q.trailing_zeros();
        let prior = PriorTable::bits(p_d, e)?;
        // re-index rows from bit patterns to X indices
        let q = self.graph.q;
        let mut table = vec![0.0; q * q];
        for xi in 0..q {
            let xb = self.graph.x_bits[xi] as usize;
            table[xi * q..(xi + 1) * q].copy_from_slice(&prior.table()[xb * q..(xb + 1) * q]);
        }
        let mut ctx = CouplingCtx::new(&prior, self.graph.x_bits.clone());
        ctx.table = table;
        Ok(ChannelModel { ctx })
    }

    /// One flooding iteration: all checks, then beliefs, couplings and variable messages.
    pub fn iterate(&self, st: &mut MessageState, sigma: &[u32], tau: &[u32], ch: &ChannelModel, ws: &mut Workspace) {
        let q = self.graph.q;
        let g = &self.graph;
        let mut maps: Vec<&[u32]> = Vec::new();
        for i in 0..g.x.nchecks() {
            let r = g.x.check_edges(i);
            maps.clear();
            maps.extend(r.clone().map(|e| g.x_map(e)));
            let span = r.start * q..r.end * q;
            self.check.update(q, &st.mu_x[span.clone()], &maps, sigma[i], &mut st.nu_x[span], &mut ws.a);
        }
        for i in 0..g.z.nchecks() {
            let r = g.z.check_edges(i);
            maps.clear();
            maps.extend(r.clone().map(|e| g.z_map(e)));
            let span = r.start * q..r.end * q;
            self.check.update(q, &st.mu_z[span.clone()], &maps, tau[i], &mut st.nu_z[span], &mut ws.a);
        }
        for j in 0..g.nvars() {
            let v = j * q..(j + 1) * q;
            product_into(&st.nu_x, g.x.var_edges(j), None, q, &mut st.lam_x[v.clone()]);
            normalize(&mut st.lam_x[v.clone()]);
            product_into(&st.nu_z, g.z.var_edges(j), None, q, &mut st.lam_z[v.clone()]);
            normalize(&mut st.lam_z[v]);
        }
        for j in 0..g.nvars() {
            let v = j * q..(j + 1) * q;
            self.coupling.to_x(&ch.ctx, &st.lam_z[v.clone()], &mut st.kappa_x[v.clone()], &mut ws.b);
            normalize(&mut st.kappa_x[v.clone()]);
            self.coupling.to_z(&ch.ctx, &st.lam_x[v.clone()], &mut st.kappa_z[v.clone()], &mut ws.b);
            normalize(&mut st.kappa_z[v.clone()]);
            for &e in g.x.var_edges(j) {
                let e = e as usize;
                ws.c.clear();
                ws.c.extend_from_slice(&st.kappa_x[v.clone()]);
                multiply_others(&st.nu_x, g.x.var_edges(j), e, q, &mut ws.c);
                normalize(&mut ws.c);
                st.mu_x[e * q..(e + 1) * q].copy_from_slice(&ws.c);
            }
            for &e in g.z.var_edges(j) {
                let e = e as usize;
                ws.c.clear();
                ws.c.extend_from_slice(&st.kappa_z[v.clone()]);
                multiply_others(&st.nu_z, g.z.var_edges(j), e, q, &mut ws.c);
                normalize(&mut ws.c);
                st.mu_z[e * q..(e + 1) * q].copy_from_slice(&ws.c);
            }
        }
    }

    /// Per-segment symbol indices chosen by the configured rule; ties go to the smaller index.
    pub fn hard_decision(&self, st: &MessageState) -> (Vec<u32>, Vec<u32>) {
        let q = self.graph.q;
        let pick = |lam: &[f64], kappa: &[f64]| -> Vec<u32> {
            (0..self.graph.nvars())
                .map(|j| {
                    let v = j * q..(j + 1) * q;
                    let (l, k) = (&lam[v.clone()], &kappa[v]);
                    let mut best = (0usize, f64::NEG_INFINITY);
                    for a in 0..q {
                        let s = match self.config.hard_decision {
                            HardDecision::CheckProduct => l[a],
                            HardDecision::Posterior => l[a] * k[a],
                        };
                        if s > best.1 {
                            best = (a, s);
                        }
                    }
                    best.0 as u32
                })
                .collect()
        };
        (pick(&st.lam_x, &st.kappa_x), pick(&st.lam_z, &st.kappa_z))
    }

    /// Normalized approximate posteriors `κ_j λ_j` for every segment, X side then Z side.
    pub fn posteriors(&self, st: &MessageState) -> (Vec<f64>, Vec<f64>) {
        let q = self.graph.q;
        let mk = |lam: &[f64], kappa: &[f64]| {
            let mut out: Vec<f64> = lam.iter().zip(kappa).map(|(a, b)| a * b).collect();
            out.chunks_mut(q).for_each(normalize);
            out
        };
        (mk(&st.lam_x, &st.kappa_x), mk(&st.lam_z, &st.kappa_z))
    }

    /// Decodes observed syndrome bits `(s, t)`; one entry per check, `e` bits each.
    pub fn decode(&self, s: &[u32], t: &[u32], ch: &ChannelModel) -> DecodeResult {
        self.decode_observed(s, t, ch, |_, _| {})
    }

    /// As [`Self::decode`], calling `observe(iteration, state)` after every iteration.
    pub fn decode_observed(
        &self,
        s: &[u32],
        t: &[u32],
        ch: &ChannelModel,
        mut observe: impl FnMut(usize, &MessageState),
    ) -> DecodeResult {
        assert_eq!(s.len(), self.graph.x.nchecks(), "X syndrome length");
        assert_eq!(t.len(), self.graph.z.nchecks(), "Z syndrome length");
        let (sigma, tau) = self.graph.syndrome_symbols(s, t);
        let mut st = MessageState::new(&self.graph);
        let mut ws = Workspace::default();
        let mut last = (Vec::new(), Vec::new());
        for it in 1..=self.config.max_iter.max(1) {
            self.iterate(&mut st, &sigma, &tau, ch, &mut ws);
            observe(it, &st);
            let (xs, zs) = self.hard_decision(&st);
            if self.graph.x_satisfied(&xs, &sigma) && self.graph.z_satisfied(&zs, &tau) {
                return self.result(true, &xs, &zs, it);
            }
            last = (xs, zs);
        }
        self.result(false, &last.0, &last.1, self.config.max_iter.max(1))
    }

    fn result(&self, success: bool, xs: &[u32], zs: &[u32], iterations: usize) -> DecodeResult {
        DecodeResult {
            success,
            x: xs.iter().map(|&a| self.graph.x_bits[a as usize]).collect(),
            z: zs.to_vec(),
            iterations,
        }
    }
}

fn product_into(nu: &[f64], edges: &[u32], skip: Option<usize>, q: usize, out: &mut [f64]) {
    out.fill(1.0);
    multiply_others(nu, edges, skip.unwrap_or(usize::MAX), q, out);
}

fn multiply_others(nu: &[f64], edges: &[u32], skip: usize, q: usize, out: &mut [f64]) {
    for &e in edges {
        let e = e as usize;
        if e == skip {
            continue;
        }
        for (o, &m) in out.iter_mut().zip(&nu[e * q..(e + 1) * q]) {
            *o *= m;
        }
    }
}

/// `(s, t)` of an error in the `F_q` form: `σ_i = Σ_j δ_ij ξ_j` with `x_j = w(ξ_j)`,
/// reported as `s_i = w(σ_i)`, and `t_i = Σ_j γ_ij z_j`.
pub fn field_syndromes(code: &CssCode, x: &[u32], z: &[u32]) -> (Vec<u32>, Vec<u32>) {
    let f = code.field();
    let ext = code.extended();
    let rows = code.block_rows();
    let s = (0..rows)
        .map(|i| {
            let sigma = ext.delta_row(i).fold(0, |acc, (c, d)| acc ^ f.mul_bits(f.exp_bits(d), f.from_w_bits(x[c])));
            f.w_of_bits(sigma)
        })
        .collect();
    let t = (0..rows)
        .map(|i| ext.gamma_row(i).fold(0, |acc, (c, g)| acc ^ f.mul_bits(f.exp_bits(g), z[c])))
        .collect();
    (s, t)
}
