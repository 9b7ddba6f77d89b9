//! Geometric interpreter: turns a procedure into a sequence of motion
//! segments so two programs can be compared by what the robot would do.
//!
//! Joint moves are traced as straight Cartesian lines, zones do not blend
//! the path, and circular moves use the chord sum `|prev→via| + |via→end|`
//! as their length.

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::syntax::{ModuleAst, MoveKind, Statement, TargetExpr};

pub const DEFAULT_TRACE_TOL_MM: f64 = 1e-6;

pub type Vec3 = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: Vec3,
    pub orient: [f64; 4],
}

impl Pose {
    pub fn at(position: Vec3) -> Self {
        Self {
            position,
            orient: [1.0, 0.0, 0.0, 0.0],
        }
    }
}

impl Default for Pose {
    fn default() -> Self {
        Self::at([0.0; 3])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub kind: MoveKind,
    pub via: Option<Vec3>,
    pub end: Vec3,
    pub speed_mm_s: f64,
    pub zone_mm: f64,
    pub duration_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionTrace {
    pub start: Pose,
    pub segments: Vec<Segment>,
    /// Sum of all `WaitTime` durations.
    pub idle_s: f64,
}

impl MotionTrace {
    pub fn endpoints(&self) -> Vec<Vec3> {
        self.segments.iter().map(|s| s.end).collect()
    }

    pub fn final_position(&self) -> Vec3 {
        self.segments
            .last()
            .map_or(self.start.position, |s| s.end)
    }

    pub fn path_length(&self) -> f64 {
        let mut prev = self.start.position;
        let mut total = 0.0;
        for seg in &self.segments {
            total += segment_length(prev, seg.via, seg.end);
            prev = seg.end;
        }
        total
    }

    pub fn duration_s(&self) -> f64 {
        self.segments.iter().map(|s| s.duration_s).sum::<f64>() + self.idle_s
    }

    /// Writes one JSON object per segment, numerals rounded to 9 significant digits.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> io::Result<()> {
        for seg in &self.segments {
            let line = SegmentLine {
                kind: seg.kind,
                via: seg.via.map(|v| v.map(sig9)),
                end: seg.end.map(sig9),
                speed_mm_s: sig9(seg.speed_mm_s),
                zone_mm: sig9(seg.zone_mm),
                duration_s: sig9(seg.duration_s),
            };
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }
}

#[derive(Serialize)]
struct SegmentLine {
    kind: MoveKind,
    via: Option<Vec3>,
    end: Vec3,
    speed_mm_s: f64,
    zone_mm: f64,
    duration_s: f64,
}

fn sig9(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return 0.0;
    }
    format!("{x:.8e}").parse().unwrap_or(x)
}

fn distance(a: Vec3, b: Vec3) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn segment_length(from: Vec3, via: Option<Vec3>, to: Vec3) -> f64 {
    match via {
        Some(v) => distance(from, v) + distance(v, to),
        None => distance(from, to),
    }
}

/// Predefined speed and zone data, keyed by lower-cased identifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionTables {
    pub speeds: BTreeMap<String, f64>,
    pub zones: BTreeMap<String, f64>,
}

/// Speed identifiers shipped with the default tables (`vN` → N mm/s).
pub const STANDARD_SPEEDS: &[u32] = &[
    5, 10, 20, 30, 40, 50, 60, 80, 100, 150, 200, 300, 400, 500, 600, 800, 1000, 1500, 2000,
    2500, 3000, 4000, 5000, 6000, 7000,
];
/// Zone identifiers shipped with the default tables (`zN` → N mm).
pub const STANDARD_ZONES: &[u32] = &[0, 1, 5, 10, 15, 20, 30, 40, 50, 60, 80, 100, 150, 200];
/// TCP speed assigned to `vmax`.
pub const VMAX_MM_S: f64 = 5000.0;

impl Default for MotionTables {
    fn default() -> Self {
        let mut speeds: BTreeMap<String, f64> = STANDARD_SPEEDS
            .iter()
            .map(|v| (format!("v{v}"), f64::from(*v)))
            .collect();
        speeds.insert("vmax".into(), VMAX_MM_S);
        let mut zones: BTreeMap<String, f64> = STANDARD_ZONES
            .iter()
            .map(|z| (format!("z{z}"), f64::from(*z)))
            .collect();
        zones.insert("fine".into(), 0.0);
        Self { speeds, zones }
    }
}

impl MotionTables {
    pub fn speed(&self, ident: &str) -> Option<f64> {
        self.speeds.get(&ident.to_ascii_lowercase()).copied()
    }

    pub fn zone(&self, ident: &str) -> Option<f64> {
        self.zones.get(&ident.to_ascii_lowercase()).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NameKind {
    Procedure,
    Target,
    Speed,
    Zone,
}

impl std::fmt::Display for NameKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NameKind::Procedure => "procedure",
            NameKind::Target => "target",
            NameKind::Speed => "speed",
            NameKind::Zone => "zone",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MotionError {
    #[error("unresolved {kind} {name}")]
    UnresolvedName { name: String, kind: NameKind },
    #[error("speed {0} maps to zero")]
    ZeroSpeed(String),
}

fn resolve(module: &ModuleAst, expr: &TargetExpr) -> Result<Vec3, MotionError> {
    let decl = module
        .declaration(expr.base_name())
        .ok_or_else(|| MotionError::UnresolvedName {
            name: expr.base_name().to_string(),
            kind: NameKind::Target,
        })?;
    let d = expr.displacement();
    let t = decl.target.trans;
    Ok([t[0] + d[0], t[1] + d[1], t[2] + d[2]])
}

/// Interprets procedure `proc_name` of `module` starting from `start`.
pub fn interpret(
    module: &ModuleAst,
    proc_name: &str,
    start: Pose,
    tables: &MotionTables,
) -> Result<MotionTrace, MotionError> {
    let proc = module
        .procedure(proc_name)
        .ok_or_else(|| MotionError::UnresolvedName {
            name: proc_name.to_string(),
            kind: NameKind::Procedure,
        })?;
    let mut segments = Vec::with_capacity(proc.statements.len());
    let mut idle_s = 0.0;
    let mut prev = start.position;
    for stmt in &proc.statements {
        let mv = match stmt {
            Statement::Wait(w) => {
                idle_s += w.seconds;
                continue;
            }
            Statement::Move(mv) => mv,
        };
        let speed = tables.speed(&mv.speed).ok_or_else(|| MotionError::UnresolvedName {
            name: mv.speed.clone(),
            kind: NameKind::Speed,
        })?;
        if speed <= 0.0 {
            return Err(MotionError::ZeroSpeed(mv.speed.clone()));
        }
        let zone = tables.zone(&mv.zone).ok_or_else(|| MotionError::UnresolvedName {
            name: mv.zone.clone(),
            kind: NameKind::Zone,
        })?;
        let via = mv.via.as_ref().map(|v| resolve(module, v)).transpose()?;
        let end = resolve(module, &mv.target)?;
        let length = segment_length(prev, via, end);
        segments.push(Segment {
            kind: mv.kind,
            via,
            end,
            speed_mm_s: speed,
            zone_mm: zone,
            duration_s: length / speed,
        });
        prev = end;
    }
    Ok(MotionTrace {
        start,
        segments,
        idle_s,
    })
}

fn within(a: Vec3, b: Vec3, tol_mm: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol_mm)
}

/// Same segment count and kinds, endpoints and via points within `tol_mm`
/// per component, speeds and zones equal.
pub fn traces_equal(a: &MotionTrace, b: &MotionTrace, tol_mm: f64) -> bool {
    a.segments.len() == b.segments.len()
        && a.segments.iter().zip(&b.segments).all(|(x, y)| {
            x.kind == y.kind
                && within(x.end, y.end, tol_mm)
                && match (x.via, y.via) {
                    (None, None) => true,
                    (Some(p), Some(q)) => within(p, q, tol_mm),
                    _ => false,
                }
                && x.speed_mm_s == y.speed_mm_s
                && x.zone_mm == y.zone_mm
        })
}
