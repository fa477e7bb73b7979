//! Per-pixel integration state machine.

use crate::event::{Event, PixelMode, SensitivityParams, D, D_FILLER, D_MAX, D_ZERO};

/// Δt_max value meaning "never force an event".
pub const DT_MAX_INFINITE: u32 = u32::MAX;

const FLUSH_EPS: f64 = 1e-9;

/// Edge between a node and its child: the event the node would emit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub d: D,
    /// Floored ticks from the owning node's start to saturation.
    pub dt: u64,
}

/// One integration node.
#[derive(Clone, Debug, PartialEq)]
pub struct PixelNode {
    pub d: D,
    pub i: f64,
    pub dt: f64,
    pub edge: Option<Edge>,
}

impl PixelNode {
    fn new(d: D) -> Self {
        Self { d, i: 0.0, dt: 0.0, edge: None }
    }
}

/// Exponent for a fresh node given the first integrated amount.
pub fn initial_d(amount: f64) -> D {
    if amount < 1.0 {
        0
    } else {
        (amount.log2().floor() as i64).clamp(0, D_MAX as i64) as D
    }
}

fn pow2(d: D) -> f64 {
    2f64.powi(d as i32)
}

fn floor_ticks(x: f64) -> u64 {
    (x + 1e-7).floor().max(0.0) as u64
}

/// Integration state of one pixel channel.
#[derive(Clone, Debug)]
pub struct PixelState {
    pub x: u16,
    pub y: u16,
    pub c: u8,
    mode: PixelMode,
    dt_ref: u32,
    base_m: u16,
    current_m: u16,
    growth_ticks: u64,
    baseline: Option<f64>,
    running_t: u64,
    level_start: u64,
    /// Absolute time the head node measures from.
    anchor: u64,
    emitted_this_level: bool,
    nodes: Vec<PixelNode>,
    candidate: Option<(D, u64)>,
}

impl PixelState {
    pub fn new(x: u16, y: u16, c: u8, mode: PixelMode, dt_ref: u32) -> Self {
        Self {
            x,
            y,
            c,
            mode,
            dt_ref,
            base_m: 0,
            current_m: 0,
            growth_ticks: 0,
            baseline: None,
            running_t: 0,
            level_start: 0,
            anchor: 0,
            emitted_this_level: false,
            nodes: Vec::new(),
            candidate: None,
        }
    }

    /// Starts the pixel clock at `t` instead of zero.
    pub fn with_start(mut self, t: u64) -> Self {
        self.running_t = t;
        self.level_start = t;
        self.anchor = t;
        self
    }

    pub fn mode(&self) -> PixelMode {
        self.mode
    }

    pub fn nodes(&self) -> &[PixelNode] {
        &self.nodes
    }

    pub fn baseline(&self) -> Option<f64> {
        self.baseline
    }

    pub fn current_m(&self) -> u16 {
        self.current_m
    }

    pub fn running_t(&self) -> u64 {
        self.running_t
    }

    pub fn level_start(&self) -> u64 {
        self.level_start
    }

    pub fn emitted_this_level(&self) -> bool {
        self.emitted_this_level
    }

    pub fn candidate(&self) -> Option<Event> {
        self.candidate.map(|(d, t)| self.event(d, t))
    }

    pub fn set_threshold(&mut self, m: u16) {
        self.base_m = m;
        self.current_m = m;
    }

    fn event(&self, d: D, t: u64) -> Event {
        debug_assert!(t <= u32::MAX as u64);
        Event::new(self.x, self.y, self.c, d, t as u32)
    }

    /// Opens a new integration level whose normalized intensity is `baseline`.
    pub fn begin_level(&mut self, baseline: f64, first_amount: f64) {
        self.baseline = Some(baseline);
        self.nodes.clear();
        self.nodes.push(PixelNode::new(initial_d(first_amount)));
        self.candidate = None;
        self.emitted_this_level = false;
        self.level_start = self.running_t;
        self.anchor = self.running_t;
    }

    /// Accumulates `amount` intensity units over `span` ticks.
    pub fn integrate(&mut self, amount: f64, span: u64) {
        debug_assert!(amount >= 0.0);
        if self.nodes.is_empty() {
            self.nodes.push(PixelNode::new(initial_d(amount)));
        }
        let span_f = span as f64;
        match self.mode {
            PixelMode::Collapse => self.integrate_collapse(amount, span_f),
            PixelMode::List => {
                let seed = initial_d(amount);
                integrate_list(&mut self.nodes, 0, amount, span_f, seed);
            }
        }
        self.running_t += span;
    }

    fn integrate_collapse(&mut self, mut amount: f64, mut span: f64) {
        let anchor = self.anchor;
        let node = &mut self.nodes[0];
        loop {
            let cap = pow2(node.d) - node.i;
            if node.d >= D_MAX || amount < cap {
                node.i += amount;
                node.dt += span;
                return;
            }
            let tp = span * cap / amount;
            node.i += cap;
            node.dt += tp;
            amount -= cap;
            span -= tp;
            self.candidate = Some((node.d, anchor + floor_ticks(node.dt)));
            node.d += 1;
        }
    }

    /// Events queued but not yet emitted, in emission order.
    pub fn queued(&self) -> Vec<Event> {
        match self.mode {
            PixelMode::Collapse => self.candidate().into_iter().collect(),
            PixelMode::List => {
                let mut t = self.anchor;
                let mut out = Vec::new();
                for edge in self.nodes.iter().map_while(|n| n.edge) {
                    t += edge.dt;
                    out.push(self.event(edge.d, t));
                }
                out
            }
        }
    }

    /// True when the incoming normalized intensity leaves the contrast band.
    pub fn should_flush(&self, incoming_normalized: f64) -> bool {
        match self.baseline {
            // relative slack absorbs rounding when equal intensities arrive over different spans
            Some(b) => (incoming_normalized - b).abs() > self.current_m as f64 + FLUSH_EPS * b.abs().max(1.0),
            None => false,
        }
    }

    /// Emits queued events. List mode keeps the tail node as the new head; collapse
    /// mode closes the level.
    pub fn flush(&mut self, out: &mut Vec<Event>) {
        match self.mode {
            PixelMode::Collapse => self.end_level(out),
            PixelMode::List => {
                let queued = self.queued();
                if let Some(last) = queued.last() {
                    self.anchor = last.t as u64;
                    self.emitted_this_level = true;
                }
                out.extend(queued);
                if let Some(mut tail) = self.nodes.pop() {
                    tail.edge = None;
                    self.nodes.clear();
                    self.nodes.push(tail);
                }
                self.baseline = None;
            }
        }
    }

    /// Emits everything integrated in the current level and resets the pixel so the
    /// next level starts exactly at `running_t`.
    ///
    /// Every level that emitted anything ends with a filler event at `running_t`
    /// (zero-length when the last event already lands there). A level holding no
    /// intensity ends with a single zero event.
    pub fn end_level(&mut self, out: &mut Vec<Event>) {
        let queued = self.queued();
        let had_body = !queued.is_empty();
        out.extend(queued);
        let now = self.running_t;
        let residual = self.nodes.first().map_or(0.0, |n| n.i);
        if now > self.level_start || had_body || self.emitted_this_level || residual >= 1.0 {
            if self.emitted_this_level || had_body {
                out.push(self.event(D_FILLER, now));
            } else {
                if residual >= 1.0 {
                    out.push(self.event(initial_d(residual), now));
                    out.push(self.event(D_FILLER, now));
                } else {
                    out.push(self.event(D_ZERO, now));
                }
            }
        }
        self.nodes.clear();
        self.candidate = None;
        self.baseline = None;
        self.emitted_this_level = false;
        self.level_start = now;
        self.anchor = now;
        self.current_m = self.base_m;
        self.growth_ticks = 0;
    }

    /// Grows the contrast threshold by one unit per `M_v` reference intervals.
    pub fn tick_sensitivity(&mut self, elapsed: u64, params: &SensitivityParams) {
        self.base_m = params.m as u16;
        let unit = params.m_v.max(1) as u64 * self.dt_ref as u64;
        self.growth_ticks += elapsed;
        let steps = self.growth_ticks / unit;
        self.growth_ticks %= unit;
        let grown = (self.current_m as u64 + steps).min(params.m_max as u64) as u16;
        self.current_m = grown.min(params.m_max as u16);
    }

    /// Lowers the contrast threshold to at most `target_m`; never raises it.
    pub fn apply_application_sensitivity(&mut self, target_m: u16) {
        self.current_m = self.current_m.min(target_m);
    }

    /// Force-emits the first event of the level once `dt_max` ticks have elapsed without
    /// one.
    pub fn enforce_dtmax(&mut self, dt_max: u32, out: &mut Vec<Event>) {
        if self.emitted_this_level
            || dt_max == DT_MAX_INFINITE
            || self.nodes.is_empty()
            || self.running_t - self.level_start < dt_max as u64
        {
            return;
        }
        let now = self.running_t;
        match self.mode {
            PixelMode::Collapse => {
                if let Some((d, t)) = self.candidate.take() {
                    out.push(self.event(d, t));
                    let node = &mut self.nodes[0];
                    node.i = (node.i - pow2(d)).max(0.0);
                    node.dt = (now - t) as f64;
                    self.anchor = t;
                } else if self.force_partial(now, out) {
                    return;
                }
            }
            PixelMode::List => {
                if let Some(edge) = self.nodes[0].edge {
                    let t = self.anchor + edge.dt;
                    out.push(self.event(edge.d, t));
                    let head_d = self.nodes[0].d;
                    self.nodes.remove(0);
                    self.nodes[0].d = head_d;
                    self.anchor = t;
                } else if self.force_partial(now, out) {
                    return;
                }
            }
        }
        self.emitted_this_level = true;
    }

    /// Emits the unsaturated integration. A zero event ends the level, so the Δt_max
    /// clock restarts at `now`; returns true in that case.
    fn force_partial(&mut self, now: u64, out: &mut Vec<Event>) -> bool {
        let residual = self.nodes[0].i;
        let d = if residual >= 1.0 { initial_d(residual) } else { D_ZERO };
        out.push(self.event(d, now));
        self.nodes.truncate(1);
        let node = &mut self.nodes[0];
        node.i = if d == D_ZERO { 0.0 } else { (residual - pow2(d)).max(0.0) };
        node.dt = 0.0;
        node.edge = None;
        self.anchor = now;
        if d == D_ZERO {
            self.level_start = now;
            self.emitted_this_level = false;
        }
        d == D_ZERO
    }

    /// One input unit: threshold growth, contrast check, integration and Δt_max forcing.
    /// The integration span is split at the Δt_max deadline so a forced event never
    /// spans more than Δt_max.
    pub fn process(
        &mut self,
        amount: f64,
        span: u64,
        dt_max: u32,
        sens: &SensitivityParams,
        out: &mut Vec<Event>,
    ) {
        if span == 0 {
            return;
        }
        self.tick_sensitivity(span, sens);
        let normalized = amount * self.dt_ref as f64 / span as f64;
        if self.baseline.is_some() && self.should_flush(normalized) {
            self.end_level(out);
        }
        if self.baseline.is_none() {
            self.begin_level(normalized, amount);
        }
        let (mut amount, mut span) = (amount, span);
        if !self.emitted_this_level && dt_max != DT_MAX_INFINITE {
            let deadline = self.level_start + dt_max as u64;
            if self.running_t < deadline && self.running_t + span > deadline {
                let head = deadline - self.running_t;
                let head_amount = amount * head as f64 / span as f64;
                self.integrate(head_amount, head);
                self.enforce_dtmax(dt_max, out);
                amount -= head_amount;
                span -= head;
            }
        }
        self.integrate(amount, span);
        self.enforce_dtmax(dt_max, out);
    }

    /// Checks the node-list invariants; returns a description of the first violation.
    pub fn check_invariants(&self) -> Result<(), String> {
        const TOL: f64 = 1e-6;
        let n = self.nodes.len();
        if self.mode == PixelMode::Collapse && n > 1 {
            return Err(format!("collapse pixel holds {n} nodes"));
        }
        for i in 0..n {
            let node = &self.nodes[i];
            if node.d > D_MAX {
                return Err(format!("node {i} has reserved D {}", node.d));
            }
            if i + 1 < n && node.edge.is_none() {
                return Err(format!("node {i} has a child but no edge"));
            }
            if i + 1 == n && node.edge.is_some() {
                return Err(format!("tail node {i} has an edge"));
            }
            // I_i = sum of 2^D' below i plus tail I
            let sum_i: f64 = self.nodes[i..n - 1].iter().map(|m| pow2(m.edge.unwrap().d)).sum::<f64>()
                + self.nodes[n - 1].i;
            if (node.i - sum_i).abs() > TOL * node.i.max(1.0) {
                return Err(format!("intensity sum broken at node {i}: {} vs {}", node.i, sum_i));
            }
            // dt_i = sum of dt' below i plus tail dt minus eps, eps in [-(edges), 0]
            let sum_dt: f64 = self.nodes[i..n - 1].iter().map(|m| m.edge.unwrap().dt as f64).sum::<f64>()
                + self.nodes[n - 1].dt;
            let eps = sum_dt - node.dt;
            let edges = (n - 1 - i) as f64;
            if eps > TOL * node.dt.max(1.0) || eps < -edges - TOL * node.dt.max(1.0) {
                return Err(format!("time sum broken at node {i}: eps={eps}, edges={edges}"));
            }
            if let Some(edge) = node.edge {
                if node.d <= edge.d {
                    return Err(format!("node {i}: D {} not above edge D' {}", node.d, edge.d));
                }
                if i + 1 < n && edge.d < self.nodes[i + 1].d {
                    return Err(format!(
                        "node {i}: edge D' {} below child D {}",
                        edge.d,
                        self.nodes[i + 1].d
                    ));
                }
            }
            if node.i > 0.0 && node.d < D_MAX && (node.d as f64) < (node.i.log2() - TOL).ceil() {
                return Err(format!("node {i}: D {} below ceil(log2 {})", node.d, node.i));
            }
        }
        Ok(())
    }
}

fn integrate_list(nodes: &mut Vec<PixelNode>, k: usize, mut amount: f64, mut span: f64, seed: D) {
    let limit = if k == 0 { D_MAX } else { nodes[k - 1].edge.map_or(D_MAX, |e| e.d) };
    loop {
        let node = &mut nodes[k];
        let cap = pow2(node.d) - node.i;
        if node.d >= limit || amount < cap {
            node.i += amount;
            node.dt += span;
            if k + 1 < nodes.len() {
                integrate_list(nodes, k + 1, amount, span, seed);
            }
            return;
        }
        let tp = span * cap / amount;
        let edge = Edge { d: node.d, dt: floor_ticks(node.dt + tp) };
        node.edge = Some(edge);
        node.i += cap;
        node.dt += tp;
        node.d += 1;
        amount -= cap;
        span -= tp;
        nodes.truncate(k + 1);
        nodes.push(PixelNode::new(edge.d.min(seed)));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn list_pixel() -> PixelState {
        PixelState::new(0, 0, 0, PixelMode::List, 255)
    }

    fn summary(p: &PixelState) -> Vec<(D, f64, f64)> {
        p.nodes().iter().map(|n| (n.d, n.i, n.dt)).collect()
    }

    #[test]
    fn list_worked_example() {
        let mut p = list_pixel();
        p.begin_level(101.0, 101.0);
        assert_eq!(p.nodes()[0].d, 6);

        p.integrate(101.0, 20);
        assert_eq!(p.nodes()[0].edge, Some(Edge { d: 6, dt: 12 }));
        let s = summary(&p);
        assert_eq!(s[0].0, 7);
        assert_eq!(s[1].0, 6);
        assert!((s[1].1 - 37.0).abs() < 1e-9);
        assert!((s[1].2 - 20.0 * 37.0 / 101.0).abs() < 1e-9);
        p.check_invariants().unwrap();

        p.integrate(40.0, 30);
        assert_eq!(p.nodes()[0].edge, Some(Edge { d: 7, dt: 40 }));
        let s = summary(&p);
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].0, 8);
        assert_eq!(s[1].0, 5);
        assert!((s[1].1 - 13.0).abs() < 1e-9);
        assert!((s[1].2 - 9.75).abs() < 1e-9);
        p.check_invariants().unwrap();

        p.integrate(25.0, 30);
        assert_eq!(p.nodes()[0].edge, Some(Edge { d: 7, dt: 40 }));
        assert_eq!(p.nodes()[1].edge, Some(Edge { d: 5, dt: 32 }));
        let s = summary(&p);
        assert_eq!(s.len(), 3);
        assert!((s[0].1 - 166.0).abs() < 1e-9);
        assert!((s[2].1 - 6.0).abs() < 1e-9);
        assert!((s[2].2 - 7.2).abs() < 1e-9);
        p.check_invariants().unwrap();

        let mut out = Vec::new();
        p.flush(&mut out);
        let ds: Vec<D> = out.iter().map(|e| e.d).collect();
        assert_eq!(ds, vec![7, 5]);
        assert_eq!(out[0].t, 40);
        assert_eq!(out[1].t, 72);
        assert_eq!(p.nodes().len(), 1);
        assert!((p.nodes()[0].i - 6.0).abs() < 1e-9);
    }

    #[test]
    fn zero_intensity_level() {
        let mut p = PixelState::new(0, 0, 0, PixelMode::Collapse, 255);
        p.integrate(0.0, 255);
        let mut out = Vec::new();
        p.flush(&mut out);
        assert_eq!(out, vec![Event::new(0, 0, 0, D_ZERO, 255)]);
    }

    #[test]
    fn fresh_flush_is_empty() {
        for mode in [PixelMode::Collapse, PixelMode::List] {
            let mut p = PixelState::new(0, 0, 0, mode, 255);
            let mut out = Vec::new();
            p.flush(&mut out);
            assert!(out.is_empty());
        }
    }

    #[test]
    fn collapse_flush_emits_candidate_and_filler() {
        let mut p = PixelState::new(3, 4, 0, PixelMode::Collapse, 255);
        // 1 unit per tick starting at D=7: cumulative saturation at t=128, 256, 512.
        p.begin_level(255.0, 128.0);
        p.integrate(519.0, 519);
        assert_eq!(p.candidate(), Some(Event::new(3, 4, 0, 9, 512)));
        assert_eq!(p.nodes()[0].d, 10);
        let mut out = Vec::new();
        p.flush(&mut out);
        assert_eq!(out, vec![Event::new(3, 4, 0, 9, 512), Event::new(3, 4, 0, D_FILLER, 519)]);
    }

    #[test]
    fn collapse_candidate_timing_matches_example() {
        // Candidate ⟨8, 410⟩ on a pixel now at D=9, t=519.
        let mut p = PixelState::new(0, 0, 0, PixelMode::Collapse, 255);
        p.begin_level(0.0, 200.0);
        assert_eq!(p.nodes()[0].d, 7);
        p.integrate(256.0, 410);
        p.integrate(40.0, 109);
        assert_eq!(p.candidate(), Some(Event::new(0, 0, 0, 8, 410)));
        assert_eq!(p.nodes()[0].d, 9);
        assert_eq!(p.running_t(), 519);
        let mut out = Vec::new();
        p.flush(&mut out);
        assert_eq!(out, vec![Event::new(0, 0, 0, 8, 410), Event::new(0, 0, 0, D_FILLER, 519)]);
    }

    #[test]
    fn should_flush_is_strict() {
        let mut p = PixelState::new(0, 0, 0, PixelMode::Collapse, 255);
        p.set_threshold(10);
        assert!(!p.should_flush(500.0));
        p.begin_level(100.0, 100.0);
        assert!(p.should_flush(111.0));
        assert!(!p.should_flush(110.0));
        assert!(!p.should_flush(90.0));
        assert!(p.should_flush(89.0));
        p.set_threshold(0);
        assert!(!p.should_flush(100.0));
        assert!(p.should_flush(101.0));
    }

    #[test]
    fn threshold_growth() {
        let sens = SensitivityParams { m: 2, m_max: 10, m_v: 2, feature_radius: 0 };
        let mut p = PixelState::new(0, 0, 0, PixelMode::Collapse, 255);
        p.set_threshold(2);
        p.tick_sensitivity(4 * 255, &sens);
        assert_eq!(p.current_m(), 4);

        let sens = SensitivityParams { m: 9, m_max: 10, m_v: 3, feature_radius: 0 };
        let mut p = PixelState::new(0, 0, 0, PixelMode::Collapse, 255);
        p.set_threshold(9);
        p.tick_sensitivity(10 * 255 * 3, &sens);
        assert_eq!(p.current_m(), 10);

        let mut p = PixelState::new(0, 0, 0, PixelMode::Collapse, 255);
        p.set_threshold(9);
        let sens = SensitivityParams { m: 9, m_max: 20, m_v: 3, feature_radius: 0 };
        p.tick_sensitivity(2 * 255, &sens);
        assert_eq!(p.current_m(), 9);
        p.tick_sensitivity(255, &sens);
        assert_eq!(p.current_m(), 10);
    }

    #[test]
    fn application_sensitivity_never_raises() {
        let mut p = PixelState::new(0, 0, 0, PixelMode::Collapse, 255);
        p.set_threshold(8);
        p.apply_application_sensitivity(0);
        assert_eq!(p.current_m(), 0);
        p.set_threshold(3);
        p.apply_application_sensitivity(5);
        assert_eq!(p.current_m(), 3);
    }

    #[test]
    fn dtmax_first_event_then_coalesce() {
        // 1 unit per tick, D starting at 8, Δt_max = 300.
        let sens = SensitivityParams::LOSSLESS;
        let mut p = PixelState::new(0, 0, 0, PixelMode::Collapse, 300);
        let mut out = Vec::new();
        p.process(300.0, 300, 300, &sens, &mut out);
        p.process(300.0, 300, 300, &sens, &mut out);
        p.process(168.0, 168, 300, &sens, &mut out);
        assert_eq!(out, vec![Event::new(0, 0, 0, 8, 256)]);
        p.end_level(&mut out);
        assert_eq!(out[1], Event::new(0, 0, 0, 9, 768));
        assert_eq!(out[2], Event::new(0, 0, 0, D_FILLER, 768));
        assert_eq!(out.len(), 3);
    }

    #[test]
    fn dtmax_list_mode_matches_collapse() {
        let sens = SensitivityParams::LOSSLESS;
        let mut p = PixelState::new(0, 0, 0, PixelMode::List, 300);
        let mut out = Vec::new();
        p.process(300.0, 300, 300, &sens, &mut out);
        p.process(300.0, 300, 300, &sens, &mut out);
        p.process(168.0, 168, 300, &sens, &mut out);
        assert_eq!(out, vec![Event::new(0, 0, 0, 8, 256)]);
        p.check_invariants().unwrap();
        p.end_level(&mut out);
        assert_eq!(out[1].d, 9);
        assert_eq!(out[1].t, 768);
    }

    #[test]
    fn dark_pixel_forced_at_dtmax() {
        let sens = SensitivityParams::LOSSLESS;
        let mut p = PixelState::new(0, 0, 0, PixelMode::Collapse, 100);
        let mut out = Vec::new();
        for _ in 0..5 {
            p.process(0.0, 100, 300, &sens, &mut out);
        }
        assert_eq!(out, vec![Event::new(0, 0, 0, D_ZERO, 300)]);
        p.end_level(&mut out);
        assert_eq!(out[1], Event::new(0, 0, 0, D_ZERO, 500));
        // zero events restart the clock, so a dark pixel reports every Δt_max
        let mut q = PixelState::new(0, 0, 0, PixelMode::List, 100);
        let mut out = Vec::new();
        for _ in 0..10 {
            q.process(0.0, 100, 300, &sens, &mut out);
        }
        let ts: Vec<u32> = out.iter().map(|e| e.t).collect();
        assert_eq!(ts, vec![300, 600, 900]);
        q.end_level(&mut out);
        assert_eq!(out.len(), 4);
    }

    #[test]
    fn dtmax_split_inside_unit() {
        let sens = SensitivityParams::LOSSLESS;
        let mut p = PixelState::new(0, 0, 0, PixelMode::Collapse, 255);
        let mut out = Vec::new();
        for _ in 0..3 {
            p.process(0.0, 255, 300, &sens, &mut out);
        }
        assert_eq!(out, vec![Event::new(0, 0, 0, D_ZERO, 300), Event::new(0, 0, 0, D_ZERO, 600)]);
    }

    #[test]
    fn infinite_dtmax_never_forces() {
        let sens = SensitivityParams::LOSSLESS;
        let mut p = PixelState::new(0, 0, 0, PixelMode::Collapse, 255);
        let mut out = Vec::new();
        for _ in 0..1000 {
            p.process(0.0, 255, DT_MAX_INFINITE, &sens, &mut out);
        }
        assert!(out.is_empty());
    }

    #[test]
    fn intensity_change_closes_level() {
        let sens = SensitivityParams::LOSSLESS;
        let mut p = PixelState::new(0, 0, 0, PixelMode::Collapse, 255);
        let mut out = Vec::new();
        p.process(100.0, 255, 255 * 100, &sens, &mut out);
        assert!(out.is_empty());
        p.process(50.0, 255, 255 * 100, &sens, &mut out);
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].d, 6);
        assert_eq!(out[1], Event::new(0, 0, 0, D_FILLER, 255));
        assert_eq!(p.level_start(), 255);
        assert_eq!(p.baseline(), Some(50.0));
    }

    #[test]
    fn d_caps_at_max() {
        let mut p = PixelState::new(0, 0, 0, PixelMode::Collapse, 255);
        p.integrate(2f64.powi(126) * 3.0, 10);
        assert_eq!(p.nodes()[0].d, D_MAX);
        p.integrate(2f64.powi(127) * 4.0, 10);
        assert_eq!(p.nodes()[0].d, D_MAX);
        assert_eq!(p.running_t(), 20);
    }
}
