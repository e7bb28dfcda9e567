//! Flat `key = value` configuration.
//!
//! Controller gains use bare keys (`k1 = 1.5`), scenario settings live under
//! `scenario.` and vehicle parameters under `physics.`. A number may carry
//! its unit (`h0 = 5 m`); a unit that does not match the key is rejected.
//! `scenario.base` picks the catalog scenario the rest of the file edits
//! (default `fig4`).

use std::collections::BTreeMap;
use std::fmt::Write as _;

use carfollow::plant::DisturbanceSpec;
use carfollow::sim::{builtin_scenario, CommandTiming, LeadProfile, PlantKind, Scenario};
use carfollow::{ControlLaw, RangePolicy};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Number(&'static str),
    Text,
}

use Kind::{Number, Text};

const KEYS: &[(&str, Kind)] = &[
    ("h0", Number("m")),
    ("t_h", Number("s")),
    ("h_min", Number("m")),
    ("epsilon", Number("m")),
    ("v_max", Number("m/s")),
    ("c", Number("m/s")),
    ("a_sat", Number("m/s^2")),
    ("a_min", Number("m/s^2")),
    ("a_com", Number("m/s^2")),
    ("k1", Number("1/s")),
    ("k2", Number("1/s")),
    ("k_i", Number("1/s^2")),
    ("scenario.base", Text),
    ("scenario.name", Text),
    ("scenario.h", Number("m")),
    ("scenario.v_f", Number("m/s")),
    ("scenario.a_f", Number("m/s^2")),
    ("scenario.torque", Number("N*m")),
    ("scenario.duration", Number("s")),
    ("scenario.dt", Number("s")),
    ("scenario.timing", Text),
    ("scenario.controller", Text),
    ("scenario.range_policy", Text),
    ("scenario.integral", Text),
    ("scenario.plant", Text),
    ("scenario.tau", Number("s")),
    ("scenario.disturbance", Text),
    ("scenario.delta", Number("m/s^2")),
    ("scenario.lead", Text),
    ("scenario.lead.v0", Number("m/s")),
    ("scenario.lead.decel", Number("m/s^2")),
    ("scenario.lead.amp", Number("m/s")),
    ("scenario.lead.f", Number("Hz")),
    ("scenario.lead.table", Text),
    ("physics.mass", Number("kg")),
    ("physics.inertia", Number("kg*m^2")),
    ("physics.wheel_radius", Number("m")),
    ("physics.gear_ratio", Number("1")),
    ("physics.rolling", Number("1")),
    ("physics.drag", Number("kg/m")),
    ("physics.grade", Number("rad")),
    ("physics.grade_rate", Number("rad/s")),
    ("physics.headwind", Number("m/s")),
    ("physics.rolling_nominal", Number("1")),
    ("physics.drag_nominal", Number("kg/m")),
    ("physics.tau", Number("s")),
];

/// A fully resolved scenario, controller gains included.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub scenario: Scenario,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

struct Entries {
    values: BTreeMap<&'static str, (usize, String)>,
}

impl Entries {
    fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| usage(format!("line {line_no}: expected `key = value`")))?;
            let key = key.trim();
            let known = KEYS
                .iter()
                .find(|(k, _)| *k == key)
                .ok_or_else(|| usage(format!("line {line_no}: unknown key `{key}`")))?;
            if values.insert(known.0, (line_no, value.trim().to_string())).is_some() {
                return Err(usage(format!("line {line_no}: `{key}` given twice")));
            }
        }
        Ok(Self { values })
    }

    fn text(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|(_, v)| v.as_str())
    }

    fn number(&self, key: &'static str) -> Result<Option<f64>, CliError> {
        let Some((line, raw)) = self.values.get(key) else {
            return Ok(None);
        };
        let unit = match KEYS.iter().find(|(k, _)| *k == key) {
            Some((_, Number(unit))) => *unit,
            _ => unreachable!("number() called on a text key"),
        };
        let mut parts = raw.split_whitespace();
        let number = parts.next().unwrap_or("");
        let value: f64 = number
            .parse()
            .map_err(|_| usage(format!("line {line}: `{key}` expects a number, got `{raw}`")))?;
        if !value.is_finite() {
            return Err(usage(format!("line {line}: `{key}` must be finite")));
        }
        match (parts.next(), parts.next()) {
            (None, _) => {}
            (Some(u), None) if u == unit => {}
            (Some(u), None) => {
                return Err(usage(format!("line {line}: `{key}` is in {unit}, not {u}")));
            }
            _ => return Err(usage(format!("line {line}: trailing text after `{key}`"))),
        }
        Ok(Some(value))
    }

    fn set(&self, key: &'static str, field: &mut f64) -> Result<(), CliError> {
        if let Some(v) = self.number(key)? {
            *field = v;
        }
        Ok(())
    }
}

fn parse_table(raw: &str) -> Result<Vec<(f64, f64)>, CliError> {
    raw.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|pair| {
            let (t, v) = pair
                .split_once(':')
                .ok_or_else(|| usage(format!("lead table entry `{pair}` is not `t:v`")))?;
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| usage(format!("lead table entry `{pair}` is not numeric")))
            };
            Ok((parse(t)?, parse(v)?))
        })
        .collect()
}

pub fn parse_law(s: &str) -> Result<ControlLaw, CliError> {
    match s {
        "nonlinear" => Ok(ControlLaw::Nonlinear),
        "linear" => Ok(ControlLaw::Linear),
        _ => Err(usage(format!("controller must be nonlinear or linear, got `{s}`"))),
    }
}

pub fn parse_policy(s: &str) -> Result<RangePolicy, CliError> {
    match s {
        "predecessor" => Ok(RangePolicy::PredecessorBased),
        "follower" => Ok(RangePolicy::FollowerBased),
        _ => Err(usage(format!("range policy must be predecessor or follower, got `{s}`"))),
    }
}

/// Plant kind by name; the lag plant takes `tau`.
pub fn parse_plant(s: &str, tau: f64) -> Result<PlantKind, CliError> {
    match s {
        "ideal" => Ok(PlantKind::Ideal),
        "disturbed" => Ok(PlantKind::Disturbed),
        "lag" => Ok(PlantKind::Lag { tau }),
        "physics" => Ok(PlantKind::Physics),
        _ => Err(usage(format!("plant must be ideal, disturbed, lag or physics, got `{s}`"))),
    }
}

fn plant_name(p: PlantKind) -> &'static str {
    match p {
        PlantKind::Ideal => "ideal",
        PlantKind::Disturbed => "disturbed",
        PlantKind::Lag { .. } => "lag",
        PlantKind::Physics => "physics",
    }
}

/// Constant disturbance of the right flavour for `plant`.
pub fn constant_disturbance(plant: PlantKind, delta: f64) -> DisturbanceSpec {
    match plant {
        PlantKind::Lag { .. } => DisturbanceSpec::ConstantHat(delta),
        PlantKind::Disturbed => DisturbanceSpec::Constant(delta),
        _ => DisturbanceSpec::None,
    }
}

impl Config {
    pub fn from_text(text: &str) -> Result<Self, CliError> {
        let e = Entries::parse(text)?;
        let base = e.text("scenario.base").unwrap_or("fig4");
        let mut sc = builtin_scenario(base).map_err(|err| usage(err.to_string()))?;
        if let Some(name) = e.text("scenario.name") {
            sc.name = name.to_string();
        }

        let p = &mut sc.params;
        for (key, field) in [
            ("h0", &mut p.h0),
            ("t_h", &mut p.t_h),
            ("h_min", &mut p.h_min),
            ("epsilon", &mut p.epsilon),
            ("v_max", &mut p.v_max),
            ("c", &mut p.c),
            ("a_sat", &mut p.a_sat),
            ("a_min", &mut p.a_min),
            ("a_com", &mut p.a_com),
            ("k1", &mut p.k1),
            ("k2", &mut p.k2),
            ("k_i", &mut p.k_i),
        ] {
            e.set(key, field)?;
        }

        e.set("scenario.h", &mut sc.initial.h)?;
        e.set("scenario.v_f", &mut sc.initial.v_f)?;
        if let Some(v) = e.number("scenario.a_f")? {
            sc.initial.a_f = Some(v);
        }
        if let Some(v) = e.number("scenario.torque")? {
            sc.initial.torque = Some(v);
        }
        e.set("scenario.duration", &mut sc.duration)?;
        e.set("scenario.dt", &mut sc.dt)?;
        if let Some(t) = e.text("scenario.timing") {
            sc.timing = match t {
                "every-stage" => CommandTiming::EveryStage,
                "zoh" => CommandTiming::ZeroOrderHold,
                _ => return Err(usage(format!("scenario.timing must be every-stage or zoh, got `{t}`"))),
            };
        }
        if let Some(t) = e.text("scenario.controller") {
            sc.law = parse_law(t)?;
        }
        if let Some(t) = e.text("scenario.range_policy") {
            sc.policy = parse_policy(t)?;
        }
        if let Some(t) = e.text("scenario.integral") {
            sc.integral = match t {
                "true" => true,
                "false" => false,
                _ => return Err(usage(format!("scenario.integral must be true or false, got `{t}`"))),
            };
        }

        let tau = match (e.number("scenario.tau")?, sc.plant) {
            (Some(t), _) => t,
            (None, PlantKind::Lag { tau }) => tau,
            (None, _) => 0.8,
        };
        if let Some(t) = e.text("scenario.plant") {
            sc.plant = parse_plant(t, tau)?;
        } else if let PlantKind::Lag { .. } = sc.plant {
            sc.plant = PlantKind::Lag { tau };
        }
        let delta = match (e.number("scenario.delta")?, sc.disturbance) {
            (Some(d), _) => d,
            (None, DisturbanceSpec::Constant(d) | DisturbanceSpec::ConstantHat(d)) => d,
            (None, _) => 0.5,
        };
        match e.text("scenario.disturbance") {
            Some("none") => sc.disturbance = DisturbanceSpec::None,
            Some("constant") => sc.disturbance = constant_disturbance(sc.plant, delta),
            Some("physics") => sc.disturbance = DisturbanceSpec::PhysicsDerived,
            Some(other) => {
                return Err(usage(format!(
                    "scenario.disturbance must be none, constant or physics, got `{other}`"
                )))
            }
            None => {
                if let DisturbanceSpec::Constant(_) | DisturbanceSpec::ConstantHat(_) = sc.disturbance {
                    sc.disturbance = constant_disturbance(sc.plant, delta);
                }
            }
        }

        sc.lead = lead_from(&e, &sc.lead)?;

        let ph = &mut sc.physics;
        for (key, field) in [
            ("physics.mass", &mut ph.mass),
            ("physics.inertia", &mut ph.inertia),
            ("physics.wheel_radius", &mut ph.wheel_radius),
            ("physics.gear_ratio", &mut ph.gear_ratio),
            ("physics.rolling", &mut ph.rolling),
            ("physics.drag", &mut ph.drag),
            ("physics.grade", &mut ph.grade),
            ("physics.grade_rate", &mut ph.grade_rate),
            ("physics.headwind", &mut ph.headwind),
            ("physics.rolling_nominal", &mut ph.rolling_nominal),
            ("physics.drag_nominal", &mut ph.drag_nominal),
            ("physics.tau", &mut ph.tau),
        ] {
            e.set(key, field)?;
        }

        sc.validate().map_err(|err| usage(err.to_string()))?;
        Ok(Self { scenario: sc })
    }

    /// Every key, in a form [`Config::from_text`] reads back unchanged.
    pub fn to_text(&self) -> String {
        let sc = &self.scenario;
        let p = &sc.params;
        let mut out = String::new();
        let mut put = |key: &str, value: String| {
            let unit = match KEYS.iter().find(|(k, _)| *k == key) {
                Some((_, Number(u))) if *u != "1" => format!(" {u}"),
                _ => String::new(),
            };
            let _ = writeln!(out, "{key} = {value}{unit}");
        };
        let num = |v: f64| format!("{v:?}");
        for (key, v) in [
            ("h0", p.h0),
            ("t_h", p.t_h),
            ("h_min", p.h_min),
            ("epsilon", p.epsilon),
            ("v_max", p.v_max),
            ("c", p.c),
            ("a_sat", p.a_sat),
            ("a_min", p.a_min),
            ("a_com", p.a_com),
            ("k1", p.k1),
            ("k2", p.k2),
            ("k_i", p.k_i),
        ] {
            put(key, num(v));
        }
        put("scenario.name", sc.name.clone());
        put("scenario.h", num(sc.initial.h));
        put("scenario.v_f", num(sc.initial.v_f));
        if let Some(a) = sc.initial.a_f {
            put("scenario.a_f", num(a));
        }
        if let Some(t) = sc.initial.torque {
            put("scenario.torque", num(t));
        }
        put("scenario.duration", num(sc.duration));
        put("scenario.dt", num(sc.dt));
        put(
            "scenario.timing",
            match sc.timing {
                CommandTiming::EveryStage => "every-stage",
                CommandTiming::ZeroOrderHold => "zoh",
            }
            .into(),
        );
        put(
            "scenario.controller",
            match sc.law {
                ControlLaw::Nonlinear => "nonlinear",
                ControlLaw::Linear => "linear",
            }
            .into(),
        );
        put(
            "scenario.range_policy",
            match sc.policy {
                RangePolicy::PredecessorBased => "predecessor",
                RangePolicy::FollowerBased => "follower",
            }
            .into(),
        );
        put("scenario.integral", sc.integral.to_string());
        put("scenario.plant", plant_name(sc.plant).into());
        if let PlantKind::Lag { tau } = sc.plant {
            put("scenario.tau", num(tau));
        }
        match sc.disturbance {
            DisturbanceSpec::None => put("scenario.disturbance", "none".into()),
            DisturbanceSpec::Constant(d) | DisturbanceSpec::ConstantHat(d) => {
                put("scenario.disturbance", "constant".into());
                put("scenario.delta", num(d));
            }
            DisturbanceSpec::PhysicsDerived => put("scenario.disturbance", "physics".into()),
        }
        match &sc.lead {
            LeadProfile::Constant(v0) => {
                put("scenario.lead", "constant".into());
                put("scenario.lead.v0", num(*v0));
            }
            LeadProfile::DecelToStop { v0, decel } => {
                put("scenario.lead", "decel".into());
                put("scenario.lead.v0", num(*v0));
                put("scenario.lead.decel", num(*decel));
            }
            LeadProfile::Sinusoid { v0, amp, freq_hz } => {
                put("scenario.lead", "sinusoid".into());
                put("scenario.lead.v0", num(*v0));
                put("scenario.lead.amp", num(*amp));
                put("scenario.lead.f", num(*freq_hz));
            }
            LeadProfile::PiecewiseTable(samples) => {
                put("scenario.lead", "table".into());
                let table: Vec<String> = samples.iter().map(|(t, v)| format!("{t:?}:{v:?}")).collect();
                put("scenario.lead.table", table.join(" "));
            }
        }
        let ph = &sc.physics;
        for (key, v) in [
            ("physics.mass", ph.mass),
            ("physics.inertia", ph.inertia),
            ("physics.wheel_radius", ph.wheel_radius),
            ("physics.gear_ratio", ph.gear_ratio),
            ("physics.rolling", ph.rolling),
            ("physics.drag", ph.drag),
            ("physics.grade", ph.grade),
            ("physics.grade_rate", ph.grade_rate),
            ("physics.headwind", ph.headwind),
            ("physics.rolling_nominal", ph.rolling_nominal),
            ("physics.drag_nominal", ph.drag_nominal),
            ("physics.tau", ph.tau),
        ] {
            put(key, num(v));
        }
        out
    }
}

fn lead_from(e: &Entries, current: &LeadProfile) -> Result<LeadProfile, CliError> {
    let kind = e.text("scenario.lead").unwrap_or(match current {
        LeadProfile::Constant(_) => "constant",
        LeadProfile::DecelToStop { .. } => "decel",
        LeadProfile::Sinusoid { .. } => "sinusoid",
        LeadProfile::PiecewiseTable(_) => "table",
    });
    let current_v0 = current.speed(0.0);
    let v0 = e.number("scenario.lead.v0")?.unwrap_or(current_v0);
    let required = |key: &'static str, fallback: Option<f64>| -> Result<f64, CliError> {
        e.number(key)?
            .or(fallback)
            .ok_or_else(|| usage(format!("lead `{kind}` needs `{key}`")))
    };
    Ok(match kind {
        "constant" => LeadProfile::Constant(v0),
        "decel" => {
            let prev = match current {
                LeadProfile::DecelToStop { decel, .. } => Some(*decel),
                _ => None,
            };
            LeadProfile::DecelToStop {
                v0,
                decel: required("scenario.lead.decel", prev)?,
            }
        }
        "sinusoid" => {
            let (amp, f) = match current {
                LeadProfile::Sinusoid { amp, freq_hz, .. } => (Some(*amp), Some(*freq_hz)),
                _ => (None, None),
            };
            let v0 = match current {
                LeadProfile::Sinusoid { v0: base, .. } => e.number("scenario.lead.v0")?.unwrap_or(*base),
                _ => v0,
            };
            LeadProfile::Sinusoid {
                v0,
                amp: required("scenario.lead.amp", amp)?,
                freq_hz: required("scenario.lead.f", f)?,
            }
        }
        "table" => {
            let table = match (e.text("scenario.lead.table"), current) {
                (Some(raw), _) => parse_table(raw)?,
                (None, LeadProfile::PiecewiseTable(s)) => s.clone(),
                (None, _) => return Err(usage("lead `table` needs `scenario.lead.table`")),
            };
            LeadProfile::PiecewiseTable(table)
        }
        _ => {
            return Err(usage(format!(
                "scenario.lead must be constant, decel, sinusoid or table, got `{kind}`"
            )))
        }
    })
}
