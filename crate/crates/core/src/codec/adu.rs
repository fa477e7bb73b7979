//! Application data units, event cubes and the intra/inter residual coder.

use super::arith::{ArithError, Decoder, Encoder};
use super::cabac::{CoderContexts, Control, DSymbol, MAX_SHIFT};
use crate::event::{sort_by_time, Event, PlaneParams, D, D_FILLER, D_MAX, D_ZERO};

/// Cube edge length in pixels.
pub const CUBE: usize = 16;

/// Intra prediction seed for the first event of every cube.
pub const SEED_D: D = 7;

/// Cube layout over a plane.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CubeGrid {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub cols: usize,
    pub rows: usize,
}

impl CubeGrid {
    pub fn new(plane: &PlaneParams) -> Self {
        let (width, height) = (plane.width as usize, plane.height as usize);
        Self {
            width,
            height,
            channels: plane.channels as usize,
            cols: width.div_ceil(CUBE),
            rows: height.div_ceil(CUBE),
        }
    }

    pub fn cube_count(&self) -> usize {
        self.cols * self.rows
    }

    /// Queue indices of a cube in scan order: pixels row-major, then channels.
    pub fn cube_slots(&self, cube: usize) -> impl Iterator<Item = usize> + '_ {
        let (cx, cy) = (cube % self.cols * CUBE, cube / self.cols * CUBE);
        let (x_end, y_end) = ((cx + CUBE).min(self.width), (cy + CUBE).min(self.height));
        (cy..y_end).flat_map(move |y| {
            (cx..x_end).flat_map(move |x| (0..self.channels).map(move |c| self.slot(x, y, c)))
        })
    }

    pub fn slot(&self, x: usize, y: usize, c: usize) -> usize {
        (y * self.width + x) * self.channels + c
    }

    pub fn slot_coords(&self, slot: usize) -> (u16, u16, u8) {
        let c = slot % self.channels;
        let p = slot / self.channels;
        ((p % self.width) as u16, (p / self.width) as u16, c as u8)
    }

    pub fn slot_count(&self) -> usize {
        self.width * self.height * self.channels
    }
}

/// Events of one time window, routed to per-pixel queues.
#[derive(Clone, Debug, PartialEq)]
pub struct Adu {
    pub start_t: u32,
    pub span: u32,
    pub queues: Vec<Vec<Event>>,
}

impl Adu {
    pub fn new(grid: &CubeGrid, start_t: u32, span: u32) -> Self {
        Self { start_t, span, queues: vec![Vec::new(); grid.slot_count()] }
    }

    pub fn end_t(&self) -> u64 {
        self.start_t as u64 + self.span as u64
    }

    pub fn contains(&self, t: u32) -> bool {
        t >= self.start_t && (t as u64) < self.end_t()
    }

    pub fn event_count(&self) -> usize {
        self.queues.iter().map(Vec::len).sum()
    }

    /// Events in canonical stream order.
    pub fn events(&self) -> Vec<Event> {
        let mut out: Vec<Event> = self.queues.iter().flatten().copied().collect();
        sort_by_time(&mut out);
        out
    }
}

/// Window start containing `t`.
pub fn window_start(t: u32, span: u32) -> u32 {
    t - t % span
}

/// Groups a time-ordered event sequence into ADUs.
#[derive(Debug)]
pub struct AduBuilder {
    grid: CubeGrid,
    span: u32,
    current: Option<Adu>,
}

impl AduBuilder {
    pub fn new(grid: CubeGrid, span: u32) -> Self {
        assert!(span > 0);
        Self { grid, span, current: None }
    }

    /// Adds an event; returns the previous ADU when this event falls past its window.
    pub fn push(&mut self, e: Event) -> Option<Adu> {
        let mut closed = None;
        if let Some(adu) = &self.current {
            if !adu.contains(e.t) {
                closed = self.current.take();
            }
        }
        let adu = self
            .current
            .get_or_insert_with(|| Adu::new(&self.grid, window_start(e.t, self.span), self.span));
        let (x, y, c) = (e.x as usize, e.y as usize, e.c as usize);
        adu.queues[self.grid.slot(x, y, c)].push(e);
        closed
    }

    pub fn finish(self) -> Option<Adu> {
        self.current
    }
}

/// Splits time-ordered events into ADUs of `span` ticks; empty windows are skipped.
pub fn build_adus(events: &[Event], grid: &CubeGrid, span: u32) -> Vec<Adu> {
    let mut b = AduBuilder::new(*grid, span);
    let mut out: Vec<Adu> = events.iter().filter_map(|e| b.push(*e)).collect();
    out.extend(b.finish());
    out
}

fn d_symbol(d: D) -> i32 {
    match d {
        D_ZERO => D_MAX as i32 + 1,
        D_FILLER => D_MAX as i32 + 2,
        d => d as i32,
    }
}

fn d_from_symbol(v: i32) -> Result<D, ArithError> {
    match v {
        0..=127 => Ok(v as D),
        128 => Ok(D_ZERO),
        129 => Ok(D_FILLER),
        _ => Err(ArithError::Corrupt),
    }
}

/// Timestamp predicted for the event after `a`, assuming unchanged intensity.
pub fn predict(t_a: i64, dt_a: i64, d_a: D, d_b: D) -> i64 {
    if d_a > D_MAX || d_b > D_MAX {
        return t_a;
    }
    let dr = d_b as i32 - d_a as i32;
    let step = if dr >= 0 { dt_a.checked_shl(dr as u32).unwrap_or(i64::MAX) } else { dt_a >> (-dr).min(63) };
    t_a.saturating_add(step.min(1 << 40))
}

/// Largest shift whose reconstructed intensity stays strictly inside the ±`m_max` band
/// around the true intensity, keeping the timeline ordered within `(t_a_rec, upper]`.
#[allow(clippy::too_many_arguments)]
pub fn choose_shift(
    p: i64,
    t_b: i64,
    t_a_true: i64,
    t_a_rec: i64,
    upper: i64,
    d_b: D,
    dt_ref: u32,
    m_max: u8,
) -> u8 {
    if m_max == 0 || d_b > D_MAX || t_b <= t_a_true {
        return 0;
    }
    let units = 2f64.powi(d_b as i32) * dt_ref as f64;
    let i_true = units / (t_b - t_a_true) as f64;
    let t_r = t_b - p;
    for s in (1..=MAX_SHIFT).rev() {
        let rec = p + ((t_r >> s) << s);
        if rec <= t_a_rec || rec > upper {
            continue;
        }
        let i_rec = units / (rec - t_a_rec) as f64;
        if (i_rec - i_true).abs() < m_max as f64 {
            return s;
        }
    }
    0
}

/// Lossy-coding controls for one ADU.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InterParams {
    pub dt_ref: u32,
    /// Intensity tolerance for time quantization; zero is lossless.
    pub m_max: u8,
}

/// Encodes one ADU into a self-contained arithmetic-coded payload.
pub fn encode_adu(adu: &Adu, grid: &CubeGrid, params: InterParams) -> Vec<u8> {
    let mut enc = Encoder::new();
    let mut ctx = CoderContexts::default();
    for cube in 0..grid.cube_count() {
        let slots: Vec<usize> = grid.cube_slots(cube).collect();
        if slots.iter().all(|&s| adu.queues[s].is_empty()) {
            ctx.d_intra.encode(&mut enc, DSymbol::Control(Control::SkipCube));
            continue;
        }
        intra_encode(adu, &slots, &mut enc, &mut ctx);
        inter_encode(adu, &slots, &mut enc, &mut ctx, params);
    }
    ctx.d_intra.encode(&mut enc, DSymbol::Control(Control::Eos));
    enc.finish()
}

/// Codes the first event of every pixel channel in the cube losslessly against the
/// previously coded first event.
fn intra_encode(adu: &Adu, slots: &[usize], enc: &mut Encoder, ctx: &mut CoderContexts) {
    let (mut prev_d, mut prev_t) = (SEED_D, adu.start_t as i64);
    for &s in slots {
        match adu.queues[s].first() {
            None => ctx.d_intra.encode(enc, DSymbol::Control(Control::EmptyPixel)),
            Some(e) => {
                ctx.d_intra.encode(enc, DSymbol::Residual(d_symbol(e.d) - d_symbol(prev_d)));
                ctx.t_intra.encode_signed(enc, e.t as i64 - prev_t);
                prev_d = e.d;
                prev_t = e.t as i64;
            }
        }
    }
}

fn inter_encode(adu: &Adu, slots: &[usize], enc: &mut Encoder, ctx: &mut CoderContexts, params: InterParams) {
    for &s in slots {
        let queue = &adu.queues[s];
        let Some(first) = queue.first() else { continue };
        let (mut d_a, mut t_a_true, mut t_a_rec, mut dt_a) = (first.d, first.t as i64, first.t as i64, 0i64);
        for (k, b) in queue.iter().enumerate().skip(1) {
            ctx.d_inter.encode(enc, DSymbol::Residual(d_symbol(b.d) - d_symbol(d_a)));
            let t_b = b.t as i64;
            let p = predict(t_a_rec, dt_a, d_a, b.d);
            let upper = match queue.get(k + 1) {
                Some(n) if n.d <= D_MAX => (n.t as i64 - 1).max(t_b),
                Some(n) => n.t as i64,
                None => adu.end_t() as i64 - 1,
            };
            let s = if b.d <= D_MAX {
                let s = choose_shift(p, t_b, t_a_true, t_a_rec, upper, b.d, params.dt_ref, params.m_max);
                ctx.shift.encode(enc, s);
                s
            } else {
                0
            };
            let r = (t_b - p) >> s;
            ctx.t_inter.encode_signed(enc, r);
            let t_rec = p + (r << s);
            dt_a = t_rec - t_a_rec;
            t_a_rec = t_rec;
            t_a_true = t_b;
            d_a = b.d;
        }
        ctx.d_inter.encode(enc, DSymbol::Control(Control::EndPixel));
    }
}

/// Errors raised while decoding an ADU payload.
#[derive(thiserror::Error, Debug, Clone, PartialEq, Eq)]
pub enum AduError {
    /// Arithmetic decoder failure
    #[error("entropy decoder: {0}")]
    Arith(#[from] ArithError),

    /// A control symbol appeared where it is not allowed
    #[error("unexpected control symbol {0:?}")]
    UnexpectedControl(Control),

    /// A decoded timestamp left the 32-bit range
    #[error("decoded timestamp {0} out of range")]
    TimeRange(i64),
}

fn to_tick(t: i64) -> Result<u32, AduError> {
    u32::try_from(t).map_err(|_| AduError::TimeRange(t))
}

/// Decodes one ADU payload back into per-pixel queues.
pub fn decode_adu(bytes: &[u8], grid: &CubeGrid, start_t: u32, span: u32) -> Result<Adu, AduError> {
    let mut adu = Adu::new(grid, start_t, span);
    let mut dec = Decoder::new(bytes);
    let mut ctx = CoderContexts::default();
    for cube in 0..grid.cube_count() {
        let slots: Vec<usize> = grid.cube_slots(cube).collect();
        let first = ctx.d_intra.decode(&mut dec)?;
        if first == DSymbol::Control(Control::SkipCube) {
            continue;
        }
        // intra
        let (mut prev_d, mut prev_t) = (SEED_D, start_t as i64);
        let mut pending = Some(first);
        for &s in &slots {
            let sym = match pending.take() {
                Some(sym) => sym,
                None => ctx.d_intra.decode(&mut dec)?,
            };
            match sym {
                DSymbol::Control(Control::EmptyPixel) => {}
                DSymbol::Control(c) => return Err(AduError::UnexpectedControl(c)),
                DSymbol::Residual(r) => {
                    let d = d_from_symbol(d_symbol(prev_d) + r)?;
                    let t = prev_t + ctx.t_intra.decode_signed(&mut dec)?;
                    let (x, y, c) = grid.slot_coords(s);
                    adu.queues[s].push(Event::new(x, y, c, d, to_tick(t)?));
                    prev_d = d;
                    prev_t = t;
                }
            }
        }
        // inter
        for &s in &slots {
            let Some(first) = adu.queues[s].first().copied() else { continue };
            let (mut d_a, mut t_a, mut dt_a) = (first.d, first.t as i64, 0i64);
            loop {
                match ctx.d_inter.decode(&mut dec)? {
                    DSymbol::Control(Control::EndPixel) => break,
                    DSymbol::Control(c) => return Err(AduError::UnexpectedControl(c)),
                    DSymbol::Residual(r) => {
                        let d = d_from_symbol(d_symbol(d_a) + r)?;
                        let p = predict(t_a, dt_a, d_a, d);
                        let sh = if d <= D_MAX { ctx.shift.decode(&mut dec)? } else { 0 };
                        let res = ctx.t_inter.decode_signed(&mut dec)?;
                        let t = p + (res << sh);
                        adu.queues[s].push(Event::new(first.x, first.y, first.c, d, to_tick(t)?));
                        dt_a = t - t_a;
                        t_a = t;
                        d_a = d;
                    }
                }
            }
        }
    }
    match ctx.d_intra.decode(&mut dec)? {
        DSymbol::Control(Control::Eos) => Ok(adu),
        DSymbol::Control(c) => Err(AduError::UnexpectedControl(c)),
        DSymbol::Residual(_) => Err(AduError::Arith(ArithError::Corrupt)),
    }
}
