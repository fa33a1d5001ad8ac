//! Seeded synthetic metadata traces with per-packet ground truth.
//!
//! A scenario describes one end device: how many interactions happen per
//! day, which commands are drawn, and how each command expands into a
//! transaction (request, response, terminating ack, optionally preceded by a
//! timed-request handshake). Interactions are placed uniformly within each
//! simulated day; intra-transaction gaps are uniform in [0.05, 0.3] s.
//! Generation is fully deterministic for a given config and seed.
//!
//! Message counters are allocated from a single per-scenario space (offset
//! by `counter_base`) so ground truth can be keyed by counter even after
//! merging several scenarios into one trace.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{DeviceType, InteractionLabel, PacketRecord, RoleMap};
use crate::sequence::{day_of, DAY_SECS};

/// Bounds on per-packet spacing inside one transaction.
const GAP_MIN: f64 = 0.05;
const GAP_MAX: f64 = 0.3;
/// Follow-up invokes trail the packet that triggered them by this much.
const TRAILING_MIN: f64 = 0.1;
const TRAILING_MAX: f64 = 0.4;
/// State reports triggered by a command trail the end of its transaction by
/// this much; the minimum keeps them outside the pairing window of the
/// transaction's own requests.
const POST_REPORT_MIN: f64 = 0.5;
const POST_REPORT_MAX: f64 = 1.0;
/// Interactions start at least this far from the end of a day so a whole
/// transaction never spills into the next day.
const DAY_MARGIN: f64 = 5.0;

const PROB_SUM_TOLERANCE: f64 = 1e-9;

/// Which controller implementation the scenario emulates. Some command
/// encodings differ by one byte between them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerVariant {
    HomeAssistant,
    AppleGoogle,
}

/// Transaction shapes a command can expand to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransactionKind {
    /// Request, response, terminating ack.
    Invoke,
    /// Timed-request handshake, then an invoke.
    TimedInvoke,
    /// Read request, report-data response, terminating ack.
    Read { multi_attr: bool },
    /// Write request, write response, terminating ack.
    Write,
}

impl Default for TransactionKind {
    fn default() -> Self {
        TransactionKind::Invoke
    }
}

fn default_response_len() -> u32 {
    70
}

/// Per-command expansion details beyond the request length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CommandProfile {
    pub kind: TransactionKind,
    pub response_len: u32,
    /// Emit a follow-up On/Off invoke shortly after the request, the way
    /// controllers batch color changes with a power-on.
    pub trailing_on_off: bool,
    /// Emit a subscription state report shortly after the transaction, the
    /// way state-changing commands do when the controller subscribes to the
    /// touched attributes.
    pub report_after: bool,
}

impl Default for CommandProfile {
    fn default() -> Self {
        CommandProfile {
            kind: TransactionKind::Invoke,
            response_len: default_response_len(),
            trailing_on_off: false,
            report_after: false,
        }
    }
}

/// How per-day command lists are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum UsageModel {
    /// Draw a count, then commands, from the configured distributions.
    #[default]
    Distribution,
    /// Issue every known command `repeats` times each day.
    FullRepertoire { repeats: u32 },
}

/// Everything needed to generate one device's traffic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub device_type: DeviceType,
    pub device_id: String,
    pub controller_id: String,
    pub days: u32,
    /// Distribution over interactions per day.
    pub interactions_per_day: BTreeMap<u32, f64>,
    /// Distribution over command names.
    pub command_distribution: BTreeMap<String, f64>,
    /// Request length per command.
    pub command_length_map: BTreeMap<String, u32>,
    pub controller_variant: ControllerVariant,
    pub seed: u64,
    #[serde(default)]
    pub command_profiles: BTreeMap<String, CommandProfile>,
    /// Unsolicited report-data transactions per day (empty: none).
    #[serde(default)]
    pub reports_per_day: BTreeMap<u32, f64>,
    #[serde(default = "default_report_len")]
    pub report_length: u32,
    /// Report-data length of post-command state reports; defaults to the
    /// size class of invoke responses, which carry the same attribute TLVs.
    #[serde(default = "default_post_report_len")]
    pub post_report_length: u32,
    #[serde(default)]
    pub usage: UsageModel,
    #[serde(default)]
    pub counter_base: u32,
}

fn default_report_len() -> u32 {
    47
}

fn default_post_report_len() -> u32 {
    70
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid scenario config: {0}")]
    InvalidConfig(String),
    #[error("{0}: {1}")]
    Io(String, String),
    #[error("{0}: {1}")]
    Parse(String, String),
}

impl ScenarioConfig {
    pub fn from_file(path: &Path) -> Result<Self, SynthError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SynthError::Io(path.display().to_string(), e.to_string()))?;
        let config: ScenarioConfig = serde_json::from_str(&text)
            .map_err(|e| SynthError::Parse(path.display().to_string(), e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_file(&self, path: &Path) -> Result<(), SynthError> {
        let text = serde_json::to_string_pretty(self).expect("scenario serializes");
        std::fs::write(path, text)
            .map_err(|e| SynthError::Io(path.display().to_string(), e.to_string()))
    }

    pub fn profile_of(&self, command: &str) -> CommandProfile {
        self.command_profiles
            .get(command)
            .copied()
            .unwrap_or_default()
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        check_distribution("interactions_per_day", self.interactions_per_day.iter())?;
        if !self.reports_per_day.is_empty() {
            check_distribution("reports_per_day", self.reports_per_day.iter())?;
        }
        let draws_commands = matches!(self.usage, UsageModel::Distribution)
            && self
                .interactions_per_day
                .iter()
                .any(|(&n, &p)| n > 0 && p > 0.0);
        if draws_commands {
            if self.command_distribution.is_empty() {
                return Err(SynthError::InvalidConfig(
                    "command_distribution is empty but interactions are drawn".into(),
                ));
            }
            check_distribution("command_distribution", self.command_distribution.iter())?;
        }
        for name in self.command_distribution.keys() {
            if !self.command_length_map.contains_key(name) {
                return Err(SynthError::InvalidConfig(format!(
                    "command {name:?} has no length mapping"
                )));
            }
        }
        for (name, &len) in &self.command_length_map {
            if len == 0 {
                return Err(SynthError::InvalidConfig(format!(
                    "command {name:?} has zero request length"
                )));
            }
            if self.profile_of(name).trailing_on_off
                && !self.command_length_map.contains_key("On/Off")
            {
                return Err(SynthError::InvalidConfig(format!(
                    "command {name:?} trails an On/Off but none is mapped"
                )));
            }
        }
        if let UsageModel::FullRepertoire { repeats } = self.usage {
            if repeats == 0 {
                return Err(SynthError::InvalidConfig("repertoire repeats is zero".into()));
            }
        }
        // 34 and 42 are the fixed control-packet lengths; a report-data
        // packet of that size would contradict its own ground truth.
        for (name, len) in [
            ("report_length", self.report_length),
            ("post_report_length", self.post_report_length),
        ] {
            if len == 0 || len == 34 || len == 42 {
                return Err(SynthError::InvalidConfig(format!(
                    "{name} {len} collides with control-packet lengths"
                )));
            }
        }
        Ok(())
    }
}

fn check_distribution<'a, K: std::fmt::Debug + 'a>(
    name: &str,
    entries: impl Iterator<Item = (&'a K, &'a f64)>,
) -> Result<(), SynthError> {
    let mut sum = 0.0;
    let mut any = false;
    for (key, &p) in entries {
        any = true;
        if !(0.0..=1.0).contains(&p) {
            return Err(SynthError::InvalidConfig(format!(
                "{name}: probability of {key:?} out of range: {p}"
            )));
        }
        sum += p;
    }
    if !any {
        return Err(SynthError::InvalidConfig(format!("{name} is empty")));
    }
    if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
        return Err(SynthError::InvalidConfig(format!(
            "{name}: probabilities sum to {sum}, expected 1"
        )));
    }
    Ok(())
}

/// Draws one key from a discrete distribution via its cumulative sum.
/// Iteration order is the map's key order, so draws are deterministic.
fn sample_discrete<'a, K>(dist: &'a BTreeMap<K, f64>, rng: &mut ChaCha8Rng) -> &'a K
where
    K: Ord,
{
    let u: f64 = rng.random();
    let mut cum = 0.0;
    let mut last = None;
    for (key, &p) in dist {
        cum += p;
        last = Some(key);
        if u < cum {
            return key;
        }
    }
    last.expect("distribution is non-empty")
}

/// Draws `n` i.i.d. commands from the distribution.
pub fn sample_commands(
    dist: &BTreeMap<String, f64>,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<String>, SynthError> {
    if dist.is_empty() {
        return Err(SynthError::InvalidConfig(
            "cannot sample from an empty command distribution".into(),
        ));
    }
    check_distribution("command_distribution", dist.iter())?;
    Ok((0..n).map(|_| sample_discrete(dist, rng).clone()).collect())
}

/// Ground truth emitted alongside a generated trace.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TruthData {
    /// Per-packet label, keyed by message counter.
    pub labels: BTreeMap<u32, InteractionLabel>,
    /// Device type of every (device, day) that carries traffic.
    pub device_days: Vec<DeviceDayTruth>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceDayTruth {
    pub device_id: String,
    pub day: i64,
    pub device_type: DeviceType,
}

impl TruthData {
    pub fn from_file(path: &Path) -> Result<Self, SynthError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SynthError::Io(path.display().to_string(), e.to_string()))?;
        serde_json::from_str(&text)
            .map_err(|e| SynthError::Parse(path.display().to_string(), e.to_string()))
    }

    pub fn to_file(&self, path: &Path) -> Result<(), SynthError> {
        let text = serde_json::to_string_pretty(self).expect("truth serializes");
        std::fs::write(path, text)
            .map_err(|e| SynthError::Io(path.display().to_string(), e.to_string()))
    }

    pub fn device_day_map(&self) -> BTreeMap<(String, i64), DeviceType> {
        self.device_days
            .iter()
            .map(|d| ((d.device_id.clone(), d.day), d.device_type))
            .collect()
    }
}

/// A generated trace with its ground truth and role map.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedScenario {
    pub records: Vec<PacketRecord>,
    pub truth: TruthData,
    pub roles: RoleMap,
}

#[derive(Debug, Clone, Copy)]
enum Flow {
    ControllerToDevice,
    DeviceToController,
}

struct PendingPacket {
    timestamp: f64,
    flow: Flow,
    len: u32,
    truth: InteractionLabel,
}

/// Expands the whole scenario into a timestamp-ordered trace.
pub fn generate(config: &ScenarioConfig) -> Result<GeneratedScenario, SynthError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut pending: Vec<PendingPacket> = Vec::new();

    for day in 0..config.days {
        let day_start = f64::from(day) * DAY_SECS;
        let commands: Vec<String> = match config.usage {
            UsageModel::Distribution => {
                let n = *sample_discrete(&config.interactions_per_day, &mut rng);
                if n > 0 {
                    sample_commands(&config.command_distribution, n as usize, &mut rng)?
                } else {
                    Vec::new()
                }
            }
            UsageModel::FullRepertoire { repeats } => config
                .command_length_map
                .keys()
                .flat_map(|name| std::iter::repeat_n(name.clone(), repeats as usize))
                .collect(),
        };
        let reports = if config.reports_per_day.is_empty() {
            0
        } else {
            *sample_discrete(&config.reports_per_day, &mut rng)
        };

        // Uniform placement within the day, then expansion in time order so
        // the RNG stream is independent of map iteration details.
        let mut slots: Vec<(f64, Option<String>)> = Vec::new();
        for command in commands {
            let at = day_start + rng.random_range(0.0..DAY_SECS - DAY_MARGIN);
            slots.push((at, Some(command)));
        }
        for _ in 0..reports {
            let at = day_start + rng.random_range(0.0..DAY_SECS - DAY_MARGIN);
            slots.push((at, None));
        }
        slots.sort_by(|a, b| a.0.total_cmp(&b.0));

        for (at, slot) in slots {
            match slot {
                Some(command) => expand_command(config, &command, at, &mut rng, &mut pending)?,
                None => expand_report(config, config.report_length, at, &mut rng, &mut pending),
            }
        }
    }

    pending.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));

    let mut records = Vec::with_capacity(pending.len());
    let mut truth = TruthData::default();
    for (i, p) in pending.iter().enumerate() {
        let counter = config.counter_base + i as u32;
        let (src_id, dst_id) = match p.flow {
            Flow::ControllerToDevice => (config.controller_id.clone(), config.device_id.clone()),
            Flow::DeviceToController => (config.device_id.clone(), config.controller_id.clone()),
        };
        records.push(PacketRecord {
            timestamp: p.timestamp,
            src_id,
            dst_id,
            src_port: 5540,
            dst_port: 5540,
            payload_len: p.len,
            message_flags: 0,
            security_flags: 0,
            session_id: 1,
            message_counter: counter,
            payload: None,
        });
        truth.labels.insert(counter, p.truth);
    }

    let mut days_seen: BTreeMap<i64, ()> = BTreeMap::new();
    for r in &records {
        days_seen.entry(day_of(r.timestamp, 0)).or_insert(());
    }
    truth.device_days = days_seen
        .into_keys()
        .map(|day| DeviceDayTruth {
            device_id: config.device_id.clone(),
            day,
            device_type: config.device_type,
        })
        .collect();

    let roles = RoleMap::new(
        [config.controller_id.clone()].into(),
        [(config.device_id.clone(), config.device_id.clone())].into(),
    )
    .map_err(|e| SynthError::InvalidConfig(e.to_string()))?;

    Ok(GeneratedScenario {
        records,
        truth,
        roles,
    })
}

fn gap(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(GAP_MIN..=GAP_MAX)
}

fn rda_truth(len: u32) -> InteractionLabel {
    if len == 41 {
        InteractionLabel::EmptyRDA
    } else {
        InteractionLabel::NonEmptyRDA
    }
}

fn expand_command(
    config: &ScenarioConfig,
    command: &str,
    at: f64,
    rng: &mut ChaCha8Rng,
    out: &mut Vec<PendingPacket>,
) -> Result<(), SynthError> {
    let req_len = *config.command_length_map.get(command).ok_or_else(|| {
        SynthError::InvalidConfig(format!("unknown command {command:?}"))
    })?;
    let profile = config.profile_of(command);

    use Flow::{ControllerToDevice as C2D, DeviceToController as D2C};
    use InteractionLabel as L;

    fn push(out: &mut Vec<PendingPacket>, t: f64, flow: Flow, len: u32, truth: InteractionLabel) {
        out.push(PendingPacket {
            timestamp: t,
            flow,
            len,
            truth,
        });
    }

    let mut t = at;
    match profile.kind {
        TransactionKind::Invoke | TransactionKind::TimedInvoke => {
            if profile.kind == TransactionKind::TimedInvoke {
                let tra_len = match config.controller_variant {
                    ControllerVariant::HomeAssistant => 39,
                    ControllerVariant::AppleGoogle => 38,
                };
                push(out, t, C2D, tra_len, L::Tra);
                t += gap(rng);
                push(out, t, D2C, 42, L::Sra2);
                t += gap(rng);
            }
            push(out, t, C2D, req_len, L::Ira1);
            t += gap(rng);
            push(out, t, D2C, profile.response_len, L::Ira2);
            t += gap(rng);
            push(out, t, C2D, 34, L::End);
        }
        TransactionKind::Read { multi_attr } => {
            let req_truth = if multi_attr {
                L::MultiAttrRRA
            } else {
                L::SingleAttrRRA
            };
            let resp_truth = if multi_attr {
                L::MultiAttrRDA
            } else {
                rda_truth(profile.response_len)
            };
            push(out, t, C2D, req_len, req_truth);
            t += gap(rng);
            push(out, t, D2C, profile.response_len, resp_truth);
            t += gap(rng);
            push(out, t, C2D, 34, L::End);
        }
        TransactionKind::Write => {
            push(out, t, C2D, req_len, L::Wra1);
            t += gap(rng);
            push(out, t, D2C, profile.response_len, L::Wra2);
            t += gap(rng);
            push(out, t, C2D, 34, L::End);
        }
    }

    if profile.trailing_on_off {
        let mut t2 = at + rng.random_range(TRAILING_MIN..=TRAILING_MAX);
        let on_off_len = config.command_length_map["On/Off"];
        let on_off = config.profile_of("On/Off");
        push(out, t2, C2D, on_off_len, L::Ira1);
        t2 += gap(rng);
        push(out, t2, D2C, on_off.response_len, L::Ira2);
        t2 += gap(rng);
        push(out, t2, C2D, 34, L::End);
        t = t.max(t2);
    }

    if profile.report_after {
        let report_at = t + rng.random_range(POST_REPORT_MIN..=POST_REPORT_MAX);
        expand_report(config, config.post_report_length, report_at, rng, out);
    }
    Ok(())
}

fn expand_report(
    _config: &ScenarioConfig,
    report_len: u32,
    at: f64,
    rng: &mut ChaCha8Rng,
    out: &mut Vec<PendingPacket>,
) {
    use Flow::{ControllerToDevice as C2D, DeviceToController as D2C};
    let mut t = at;
    out.push(PendingPacket {
        timestamp: t,
        flow: D2C,
        len: report_len,
        truth: rda_truth(report_len),
    });
    t += gap(rng);
    out.push(PendingPacket {
        timestamp: t,
        flow: C2D,
        len: 42,
        truth: InteractionLabel::Sra2,
    });
    t += gap(rng);
    out.push(PendingPacket {
        timestamp: t,
        flow: D2C,
        len: 34,
        truth: InteractionLabel::End,
    });
}

/// Generates several scenarios and merges them into one trace. Counter
/// spaces must be disjoint so truth stays keyed by counter.
pub fn generate_merged(configs: &[ScenarioConfig]) -> Result<GeneratedScenario, SynthError> {
    let mut records = Vec::new();
    let mut truth = TruthData::default();
    let mut controllers = std::collections::BTreeSet::new();
    let mut devices = BTreeMap::new();

    for config in configs {
        let one = generate(config)?;
        for (counter, label) in one.truth.labels {
            if truth.labels.insert(counter, label).is_some() {
                return Err(SynthError::InvalidConfig(format!(
                    "message counter {counter} allocated by two scenarios; \
                     set distinct counter_base values"
                )));
            }
        }
        truth.device_days.extend(one.truth.device_days);
        controllers.extend(one.roles.controllers);
        for (id, name) in one.roles.devices {
            if controllers.contains(&id) {
                return Err(SynthError::InvalidConfig(format!(
                    "endpoint {id} is a controller in one scenario and a device in another"
                )));
            }
            devices.insert(id, name);
        }
        records.extend(one.records);
    }

    records.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
    truth
        .device_days
        .sort_by(|a, b| (&a.device_id, a.day).cmp(&(&b.device_id, b.day)));

    let roles = RoleMap::new(controllers, devices)
        .map_err(|e| SynthError::InvalidConfig(e.to_string()))?;
    Ok(GeneratedScenario {
        records,
        truth,
        roles,
    })
}

// ---------------------------------------------------------------------------
// Built-in scenarios
// ---------------------------------------------------------------------------

fn lighting_commands(
    variant: ControllerVariant,
) -> (BTreeMap<String, u32>, BTreeMap<String, CommandProfile>) {
    let level_len = match variant {
        ControllerVariant::HomeAssistant => 71,
        ControllerVariant::AppleGoogle => 70,
    };
    let lengths: BTreeMap<String, u32> = [
        ("On/Off".to_string(), 59),
        ("MoveToLevelWithOnOff".to_string(), level_len),
        ("MoveToColorTemperature(warm)".to_string(), 73),
        ("MoveToColorTemperature(cool)".to_string(), 72),
        ("MoveToHueAndSaturation".to_string(), 75),
    ]
    .into();
    let trailing = CommandProfile {
        trailing_on_off: true,
        ..CommandProfile::default()
    };
    let profiles: BTreeMap<String, CommandProfile> = [
        ("MoveToColorTemperature(warm)".to_string(), trailing),
        ("MoveToColorTemperature(cool)".to_string(), trailing),
        ("MoveToHueAndSaturation".to_string(), trailing),
    ]
    .into();
    (lengths, profiles)
}

fn lighting_distribution() -> BTreeMap<String, f64> {
    [
        ("On/Off".to_string(), 0.4),
        ("MoveToLevelWithOnOff".to_string(), 0.25),
        ("MoveToColorTemperature(warm)".to_string(), 0.13),
        ("MoveToColorTemperature(cool)".to_string(), 0.11),
        ("MoveToHueAndSaturation".to_string(), 0.11),
    ]
    .into()
}

fn lighting_base(seed: u64, days: u32) -> ScenarioConfig {
    let (lengths, profiles) = lighting_commands(ControllerVariant::HomeAssistant);
    ScenarioConfig {
        device_type: DeviceType::Lighting,
        device_id: "lighting-1".into(),
        controller_id: "controller-1".into(),
        days,
        interactions_per_day: BTreeMap::new(),
        command_distribution: lighting_distribution(),
        command_length_map: lengths,
        controller_variant: ControllerVariant::HomeAssistant,
        seed,
        command_profiles: profiles,
        reports_per_day: BTreeMap::new(),
        report_length: default_report_len(),
        post_report_length: default_post_report_len(),
        usage: UsageModel::Distribution,
        counter_base: 0,
    }
}

/// Realistic lighting usage: mostly three or four invokes per day.
pub fn exp1(seed: u64, days: u32) -> ScenarioConfig {
    let mut config = lighting_base(seed, days);
    config.interactions_per_day =
        [(1, 0.1), (2, 0.2), (3, 0.3), (4, 0.3), (5, 0.1)].into();
    config
}

/// Uniform lighting usage: one to five invokes per day, equal weight.
pub fn exp2(seed: u64, days: u32) -> ScenarioConfig {
    let mut config = lighting_base(seed, days);
    config.interactions_per_day =
        [(1, 0.2), (2, 0.2), (3, 0.2), (4, 0.2), (5, 0.2)].into();
    config
}

/// Full-repertoire exercise: four devices (one per type) issue every command
/// they know five times per day. Sensors only emit unsolicited reports.
pub fn full_repertoire(seed: u64, days: u32) -> Vec<ScenarioConfig> {
    let (light_lengths, light_profiles) = lighting_commands(ControllerVariant::HomeAssistant);
    let lighting = ScenarioConfig {
        usage: UsageModel::FullRepertoire { repeats: 5 },
        interactions_per_day: [(0, 1.0)].into(),
        command_distribution: BTreeMap::new(),
        command_length_map: light_lengths,
        command_profiles: light_profiles,
        counter_base: 0,
        ..lighting_base(seed, days)
    };

    let lock_profile = CommandProfile {
        kind: TransactionKind::TimedInvoke,
        ..CommandProfile::default()
    };
    let lock = ScenarioConfig {
        device_type: DeviceType::Lock,
        device_id: "lock-1".into(),
        controller_id: "controller-1".into(),
        days,
        interactions_per_day: [(0, 1.0)].into(),
        command_distribution: BTreeMap::new(),
        command_length_map: [("Lock".to_string(), 64), ("Unlock".to_string(), 64)].into(),
        controller_variant: ControllerVariant::HomeAssistant,
        seed: seed.wrapping_add(1),
        command_profiles: [
            ("Lock".to_string(), lock_profile),
            ("Unlock".to_string(), lock_profile),
        ]
        .into(),
        reports_per_day: BTreeMap::new(),
        report_length: default_report_len(),
        post_report_length: default_post_report_len(),
        usage: UsageModel::FullRepertoire { repeats: 5 },
        counter_base: 10_000_000,
    };

    let plug = ScenarioConfig {
        device_type: DeviceType::Plug,
        device_id: "plug-1".into(),
        controller_id: "controller-1".into(),
        days,
        interactions_per_day: [(0, 1.0)].into(),
        command_distribution: BTreeMap::new(),
        command_length_map: [("On/Off".to_string(), 59)].into(),
        controller_variant: ControllerVariant::HomeAssistant,
        seed: seed.wrapping_add(2),
        command_profiles: BTreeMap::new(),
        reports_per_day: BTreeMap::new(),
        report_length: default_report_len(),
        post_report_length: default_post_report_len(),
        usage: UsageModel::FullRepertoire { repeats: 5 },
        counter_base: 20_000_000,
    };

    let sensor = ScenarioConfig {
        device_type: DeviceType::Sensor,
        device_id: "sensor-1".into(),
        controller_id: "controller-1".into(),
        days,
        interactions_per_day: [(0, 1.0)].into(),
        command_distribution: BTreeMap::new(),
        command_length_map: BTreeMap::new(),
        controller_variant: ControllerVariant::HomeAssistant,
        seed: seed.wrapping_add(3),
        command_profiles: BTreeMap::new(),
        reports_per_day: [(3, 0.5), (4, 0.5)].into(),
        report_length: default_report_len(),
        post_report_length: default_post_report_len(),
        usage: UsageModel::Distribution,
        counter_base: 30_000_000,
    };

    vec![lighting, lock, plug, sensor]
}

/// Mixed lighting workload covering invoke, read, write, and report traffic
/// on one device. This is the scenario the robustness sweeps run on: rich
/// enough that broken pairings can cross rule boundaries. State-changing
/// commands trigger subscription reports shortly after their transaction.
pub fn mixed_workload(seed: u64, days: u32) -> ScenarioConfig {
    let mut config = lighting_base(seed, days);
    config.device_id = "lighting-1".into();
    config.interactions_per_day =
        [(1, 0.1), (2, 0.2), (3, 0.3), (4, 0.3), (5, 0.1)].into();
    config.command_distribution = [
        ("On/Off".to_string(), 0.2),
        ("MoveToHueAndSaturation".to_string(), 0.16),
        ("MoveToLevelWithOnOff".to_string(), 0.16),
        ("ReadVendorInfo".to_string(), 0.16),
        ("WriteOffTransitionTime".to_string(), 0.16),
        ("ReadSingleAttr".to_string(), 0.16),
    ]
    .into();
    config
        .command_length_map
        .extend([
            ("ReadVendorInfo".to_string(), 60),
            ("WriteOffTransitionTime".to_string(), 63),
            ("ReadSingleAttr".to_string(), 55),
        ]);
    let state_changing = CommandProfile {
        report_after: true,
        ..CommandProfile::default()
    };
    config
        .command_profiles
        .insert("On/Off".to_string(), state_changing);
    config
        .command_profiles
        .insert("MoveToLevelWithOnOff".to_string(), state_changing);
    for color in [
        "MoveToColorTemperature(warm)",
        "MoveToColorTemperature(cool)",
        "MoveToHueAndSaturation",
    ] {
        if let Some(profile) = config.command_profiles.get_mut(color) {
            profile.report_after = true;
        }
    }
    config.command_profiles.extend([
        (
            "ReadVendorInfo".to_string(),
            CommandProfile {
                kind: TransactionKind::Read { multi_attr: true },
                response_len: 80,
                ..CommandProfile::default()
            },
        ),
        (
            "WriteOffTransitionTime".to_string(),
            CommandProfile {
                kind: TransactionKind::Write,
                response_len: 65,
                report_after: true,
                ..CommandProfile::default()
            },
        ),
        (
            "ReadSingleAttr".to_string(),
            CommandProfile {
                kind: TransactionKind::Read { multi_attr: false },
                response_len: 48,
                ..CommandProfile::default()
            },
        ),
    ]);
    config.reports_per_day = [(1, 0.5), (2, 0.5)].into();
    config
}

/// Built-in scenario names accepted by the pipelines.
pub fn builtin_scenario(name: &str, seed: u64, days: u32) -> Option<Vec<ScenarioConfig>> {
    match name {
        "exp1" => Some(vec![exp1(seed, days)]),
        "exp2" => Some(vec![exp2(seed, days)]),
        "d3" => Some(full_repertoire(seed, days)),
        "mixed" => Some(vec![mixed_workload(seed, days)]),
        _ => None,
    }
}
