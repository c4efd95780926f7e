//! Detection and result files.
//!
//! Both are JSON lines. The first line is a header naming the schema and
//! version; every following line is one record. Detection records hold
//! one frame:
//!
//! ```json
//! {"scene_id": "s0", "frame_id": "f3", "timestamp_s": 1.5,
//!  "boxes": [{"center": [x, y, z], "size": [w, l, h], "yaw": 0.1,
//!             "velocity": [vx, vy], "category": "car", "score": 0.9}]}
//! ```
//!
//! A box gives its heading either as `yaw` in radians or as a unit
//! `quaternion` `[w, x, y, z]`; `velocity` is optional. Result records
//! hold one tracked box and are written with fixed key order and six
//! decimals, so identical runs give identical bytes.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Deserialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::geometry::BoxState;
use crate::lifecycle::ResultRecord;
use crate::preprocessing::{DetectionFrame, Scene};

pub const DETECTION_SCHEMA: &str = "polymot.detections";
pub const RESULT_SCHEMA: &str = "polymot.results";
pub const SCHEMA_VERSION: u64 = 1;

/// Scene id used for records that omit `scene_id`.
pub const DEFAULT_SCENE: &str = "default";

const QUATERNION_TOLERANCE: f64 = 1e-5;

/// Yaw about +z of a unit quaternion `[w, x, y, z]`.
pub fn quaternion_to_yaw(q: [f64; 4]) -> Result<f64> {
    let [w, x, y, z] = q;
    let norm = (w * w + x * x + y * y + z * z).sqrt();
    if !((norm - 1.0).abs() <= QUATERNION_TOLERANCE) {
        return Err(Error::Config(format!("quaternion norm is {norm}, expected 1")));
    }
    Ok((2.0 * (w * z + x * y)).atan2(1.0 - 2.0 * (y * y + z * z)))
}

fn header_line(schema: &str) -> String {
    format!("{{\"schema\":\"{schema}\",\"version\":{SCHEMA_VERSION}}}")
}

fn check_header(obj: &Map<String, Value>, schema: &str, record: usize) -> Result<()> {
    match obj.get("schema").and_then(Value::as_str) {
        Some(s) if s == schema => {}
        Some(s) => return Err(Error::schema(record, "schema", format!("expected `{schema}`, got `{s}`"))),
        None => return Err(Error::schema(record, "schema", "expected a string")),
    }
    match obj.get("version").and_then(Value::as_u64) {
        Some(SCHEMA_VERSION) => Ok(()),
        Some(v) => Err(Error::schema(record, "version", format!("unsupported version {v}"))),
        None => Err(Error::schema(record, "version", "expected an integer")),
    }
}

/// Non-blank lines with their 1-based line numbers.
fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if !line.trim().is_empty() {
            out.push((i + 1, line));
        }
    }
    Ok(out)
}

struct Fields<'a> {
    record: usize,
    prefix: String,
    obj: &'a Map<String, Value>,
}

impl<'a> Fields<'a> {
    fn path(&self, key: &str) -> String {
        if self.prefix.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.prefix)
        }
    }

    fn err(&self, key: &str, message: impl Into<String>) -> Error {
        Error::schema(self.record, self.path(key), message)
    }

    fn get(&self, key: &str) -> Option<&'a Value> {
        self.obj.get(key).filter(|v| !v.is_null())
    }

    fn number(&self, key: &str) -> Result<f64> {
        let v = self.get(key).ok_or_else(|| self.err(key, "missing"))?;
        number(v).ok_or_else(|| self.err(key, "expected a finite number"))
    }

    fn string(&self, key: &str) -> Result<String> {
        match self.get(key) {
            Some(Value::String(s)) => Ok(s.clone()),
            Some(Value::Number(n)) => Ok(n.to_string()),
            Some(_) => Err(self.err(key, "expected a string")),
            None => Err(self.err(key, "missing")),
        }
    }

    fn array<const N: usize>(&self, key: &str) -> Result<Option<[f64; N]>> {
        let Some(v) = self.get(key) else {
            return Ok(None);
        };
        let arr = v.as_array().filter(|a| a.len() == N).ok_or_else(|| self.err(key, format!("expected {N} numbers")))?;
        let mut out = [0.0; N];
        for (i, x) in arr.iter().enumerate() {
            out[i] = number(x).ok_or_else(|| self.err(key, format!("element {i} is not a finite number")))?;
        }
        Ok(Some(out))
    }

    fn required_array<const N: usize>(&self, key: &str) -> Result<[f64; N]> {
        self.array(key)?.ok_or_else(|| self.err(key, "missing"))
    }
}

fn number(v: &Value) -> Option<f64> {
    v.as_f64().filter(|x| x.is_finite())
}

fn parse_box(fields: &Fields) -> Result<BoxState> {
    let center = fields.required_array::<3>("center")?;
    let size = fields.required_array::<3>("size")?;
    let yaw = match (fields.get("yaw"), fields.array::<4>("quaternion")?) {
        (Some(_), Some(_)) => return Err(fields.err("yaw", "give either yaw or quaternion, not both")),
        (Some(_), None) => fields.number("yaw")?,
        (None, Some(q)) => quaternion_to_yaw(q).map_err(|e| match e {
            Error::Config(msg) => fields.err("quaternion", msg),
            other => other,
        })?,
        (None, None) => return Err(fields.err("yaw", "missing (give yaw or quaternion)")),
    };
    let score = fields.number("score")?;
    if !(0.0..=1.0).contains(&score) {
        return Err(fields.err("score", format!("{score} outside [0, 1]")));
    }
    for (i, name) in ["w", "l", "h"].iter().enumerate() {
        if size[i] <= 0.0 {
            return Err(fields.err("size", format!("{name} = {} must be positive", size[i])));
        }
    }
    let mut b = BoxState::new(center, size, yaw)
        .with_score(score)
        .with_category(fields.string("category")?);
    if let Some([vx, vy]) = fields.array::<2>("velocity")? {
        b = b.with_velocity(vx, vy);
    }
    Ok(b)
}

fn parse_frame(record: usize, obj: &Map<String, Value>) -> Result<(String, DetectionFrame)> {
    let f = Fields {
        record,
        prefix: String::new(),
        obj,
    };
    let scene = match f.get("scene_id") {
        Some(_) => f.string("scene_id")?,
        None => DEFAULT_SCENE.to_string(),
    };
    let frame_id = f.string("frame_id")?;
    let timestamp = f.number("timestamp_s")?;
    let boxes = match f.get("boxes") {
        Some(Value::Array(a)) => a,
        Some(_) => return Err(f.err("boxes", "expected an array")),
        None => return Err(f.err("boxes", "missing")),
    };
    let mut detections = Vec::with_capacity(boxes.len());
    for (i, b) in boxes.iter().enumerate() {
        let obj = b
            .as_object()
            .ok_or_else(|| Error::schema(record, format!("boxes[{i}]"), "expected an object"))?;
        detections.push(parse_box(&Fields {
            record,
            prefix: format!("boxes[{i}]"),
            obj,
        })?);
    }
    Ok((scene, DetectionFrame::new(frame_id, timestamp, detections)))
}

/// Loads a detection file, grouping frames by scene (in order of first
/// appearance) and sorting each scene by timestamp.
///
/// Errors name the 1-based line and the offending field. Duplicate frame
/// ids or timestamps within a scene are rejected.
pub fn load_detections(path: impl AsRef<Path>) -> Result<Vec<Scene>> {
    let path = path.as_ref();
    let mut scenes: Vec<Scene> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();

    for (n, (line_no, line)) in read_lines(path)?.into_iter().enumerate() {
        let value: Value =
            serde_json::from_str(&line).map_err(|e| Error::schema(line_no, "", format!("invalid JSON: {e}")))?;
        let obj = value
            .as_object()
            .ok_or_else(|| Error::schema(line_no, "", "expected a JSON object"))?;
        if n == 0 && obj.contains_key("schema") {
            check_header(obj, DETECTION_SCHEMA, line_no)?;
            continue;
        }
        let (scene_id, frame) = parse_frame(line_no, obj)?;
        let slot = *index.entry(scene_id.clone()).or_insert_with(|| {
            scenes.push(Scene {
                id: scene_id.clone(),
                frames: Vec::new(),
            });
            scenes.len() - 1
        });
        let scene = &mut scenes[slot];
        if scene.frames.iter().any(|f| f.frame_id == frame.frame_id) {
            return Err(Error::schema(
                line_no,
                "frame_id",
                format!("duplicate frame `{}` in scene `{scene_id}`", frame.frame_id),
            ));
        }
        if scene.frames.iter().any(|f| f.timestamp == frame.timestamp) {
            return Err(Error::schema(
                line_no,
                "timestamp_s",
                format!("duplicate timestamp {} in scene `{scene_id}`", frame.timestamp),
            ));
        }
        scene.frames.push(frame);
    }
    for s in &mut scenes {
        s.frames.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
    }
    Ok(scenes)
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

fn fixed(v: f64) -> String {
    format!("{v:.6}")
}

fn write_box(out: &mut String, b: &BoxState) {
    out.push_str(&format!(
        "{{\"center\":[{},{},{}],\"size\":[{},{},{}],\"yaw\":{}",
        fixed(b.x),
        fixed(b.y),
        fixed(b.z),
        fixed(b.w),
        fixed(b.l),
        fixed(b.h),
        fixed(b.yaw)
    ));
    if let Some([vx, vy]) = b.velocity {
        out.push_str(&format!(",\"velocity\":[{},{}]", fixed(vx), fixed(vy)));
    }
    out.push_str(&format!(
        ",\"category\":{},\"score\":{}}}",
        json_str(&b.category),
        fixed(b.score)
    ));
}

/// Writes scenes in the detection schema.
pub fn write_detections(scenes: &[Scene], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "{}", header_line(DETECTION_SCHEMA)).map_err(io)?;
    for scene in scenes {
        for f in &scene.frames {
            let mut line = format!(
                "{{\"scene_id\":{},\"frame_id\":{},\"timestamp_s\":{},\"boxes\":[",
                json_str(&scene.id),
                json_str(&f.frame_id),
                fixed(f.timestamp)
            );
            for (i, b) in f.detections.iter().enumerate() {
                if i > 0 {
                    line.push(',');
                }
                write_box(&mut line, b);
            }
            line.push_str("]}");
            writeln!(w, "{line}").map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

/// Serializes one result record as a single JSON line, without the newline.
pub fn format_record(r: &ResultRecord) -> String {
    format!(
        "{{\"scene_id\":{},\"frame_id\":{},\"timestamp_s\":{},\"tracking_id\":{},\"category\":{},\
         \"x\":{},\"y\":{},\"z\":{},\"w\":{},\"l\":{},\"h\":{},\"yaw\":{},\"vx\":{},\"vy\":{},\"tracking_score\":{}}}",
        json_str(&r.scene_id),
        json_str(&r.frame_id),
        fixed(r.timestamp),
        r.tracking_id,
        json_str(&r.category),
        fixed(r.x),
        fixed(r.y),
        fixed(r.z),
        fixed(r.w),
        fixed(r.l),
        fixed(r.h),
        fixed(r.yaw),
        fixed(r.vx),
        fixed(r.vy),
        fixed(r.tracking_score)
    )
}

/// Streams result records to a file.
pub struct ResultWriter {
    path: PathBuf,
    out: BufWriter<File>,
    count: usize,
}

impl ResultWriter {
    pub fn create(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut out = BufWriter::new(file);
        writeln!(out, "{}", header_line(RESULT_SCHEMA)).map_err(|e| Error::io(&path, e))?;
        Ok(ResultWriter { path, out, count: 0 })
    }

    pub fn write(&mut self, r: &ResultRecord) -> Result<()> {
        writeln!(self.out, "{}", format_record(r)).map_err(|e| Error::io(&self.path, e))?;
        self.count += 1;
        Ok(())
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn finish(mut self) -> Result<usize> {
        self.out.flush().map_err(|e| Error::io(&self.path, e))?;
        Ok(self.count)
    }
}

pub fn write_results<'a>(records: impl IntoIterator<Item = &'a ResultRecord>, path: impl AsRef<Path>) -> Result<usize> {
    let mut w = ResultWriter::create(path)?;
    for r in records {
        w.write(r)?;
    }
    w.finish()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    scene_id: String,
    frame_id: String,
    timestamp_s: f64,
    tracking_id: u64,
    category: String,
    x: f64,
    y: f64,
    z: f64,
    w: f64,
    l: f64,
    h: f64,
    yaw: f64,
    vx: f64,
    vy: f64,
    tracking_score: f64,
}

/// Reads a result file written by [`write_results`].
pub fn load_results(path: impl AsRef<Path>) -> Result<Vec<ResultRecord>> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for (n, (line_no, line)) in read_lines(path)?.into_iter().enumerate() {
        if n == 0 {
            let value: Value =
                serde_json::from_str(&line).map_err(|e| Error::schema(line_no, "", format!("invalid JSON: {e}")))?;
            if let Some(obj) = value.as_object().filter(|o| o.contains_key("schema")) {
                check_header(obj, RESULT_SCHEMA, line_no)?;
                continue;
            }
        }
        let r: RawRecord = serde_json::from_str(&line).map_err(|e| Error::schema(line_no, "", e.to_string()))?;
        out.push(ResultRecord {
            scene_id: r.scene_id,
            frame_id: r.frame_id,
            timestamp: r.timestamp_s,
            tracking_id: r.tracking_id,
            category: r.category,
            x: r.x,
            y: r.y,
            z: r.z,
            w: r.w,
            l: r.l,
            h: r.h,
            yaw: r.yaw,
            vx: r.vx,
            vy: r.vy,
            tracking_score: r.tracking_score,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

    fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> PathBuf {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    const HEADER: &str = "{\"schema\":\"polymot.detections\",\"version\":1}\n";

    #[test]
    fn quaternion_yaw() {
        let yaw = quaternion_to_yaw([FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2]).unwrap();
        assert_abs_diff_eq!(yaw, FRAC_PI_2, epsilon = 1e-12);
        assert!(quaternion_to_yaw([1.0, 0.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn empty_detection_file() {
        let dir = tempfile::tempdir().unwrap();
        assert!(load_detections(write(&dir, "a.jsonl", HEADER)).unwrap().is_empty());
        assert!(load_detections(write(&dir, "b.jsonl", "")).unwrap().is_empty());
    }

    #[test]
    fn frames_grouped_and_sorted() {
        let dir = tempfile::tempdir().unwrap();
        let text = format!(
            "{HEADER}{}\n{}\n{}\n",
            r#"{"scene_id":"b","frame_id":"1","timestamp_s":1.0,"boxes":[]}"#,
            r#"{"scene_id":"a","frame_id":"x","timestamp_s":0.0,"boxes":[{"center":[1,2,3],"size":[1,2,1],"quaternion":[0.7071067811865476,0,0,0.7071067811865476],"category":"car","score":0.5}]}"#,
            r#"{"scene_id":"b","frame_id":"0","timestamp_s":0.5,"boxes":[]}"#,
        );
        let scenes = load_detections(write(&dir, "d.jsonl", &text)).unwrap();
        assert_eq!(scenes.len(), 2);
        assert_eq!(scenes[0].id, "b");
        assert_eq!(scenes[0].frames[0].frame_id, "0");
        let d = &scenes[1].frames[0].detections[0];
        assert_abs_diff_eq!(d.yaw, FRAC_PI_2, epsilon = 1e-12);
        assert_eq!(d.velocity, None);
    }

    #[test]
    fn schema_errors_name_record_and_field() {
        let dir = tempfile::tempdir().unwrap();
        let bad_size = format!(
            "{HEADER}{}\n",
            r#"{"scene_id":"a","frame_id":"0","timestamp_s":0,"boxes":[{"center":[0,0,0],"size":[1,1],"yaw":0,"category":"car","score":0.5}]}"#
        );
        let err = load_detections(write(&dir, "e1", &bad_size)).unwrap_err().to_string();
        assert!(err.contains("record 2") && err.contains("boxes[0].size"), "{err}");

        let bad_quat = format!(
            "{HEADER}{}\n",
            r#"{"frame_id":"0","timestamp_s":0,"boxes":[{"center":[0,0,0],"size":[1,1,1],"quaternion":[1,0,0,1],"category":"car","score":0.5}]}"#
        );
        let err = load_detections(write(&dir, "e2", &bad_quat)).unwrap_err().to_string();
        assert!(err.contains("boxes[0].quaternion"), "{err}");

        let dup = format!(
            "{HEADER}{}\n{}\n",
            r#"{"scene_id":"a","frame_id":"0","timestamp_s":0,"boxes":[]}"#,
            r#"{"scene_id":"a","frame_id":"0","timestamp_s":1,"boxes":[]}"#
        );
        let err = load_detections(write(&dir, "e3", &dup)).unwrap_err().to_string();
        assert!(err.contains("record 3") && err.contains("duplicate frame"), "{err}");

        let missing = format!("{HEADER}{}\n", r#"{"scene_id":"a","timestamp_s":0,"boxes":[]}"#);
        let err = load_detections(write(&dir, "e4", &missing)).unwrap_err().to_string();
        assert!(err.contains("frame_id"), "{err}");
    }

    fn record() -> ResultRecord {
        ResultRecord {
            scene_id: "scene-1".into(),
            frame_id: "f\"0".into(),
            timestamp: 0.5,
            tracking_id: 7,
            category: "car".into(),
            x: 1.25,
            y: -2.5,
            z: 0.75,
            w: 1.875,
            l: 4.5,
            h: 1.5,
            yaw: -0.125,
            vx: 3.0,
            vy: 0.0,
            tracking_score: 0.875,
        }
    }

    #[test]
    fn results_round_trip_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.jsonl");
        assert_eq!(write_results(&[], &p).unwrap(), 0);
        assert!(load_results(&p).unwrap().is_empty());

        write_results(&[record()], &p).unwrap();
        let first = std::fs::read(&p).unwrap();
        let back = load_results(&p).unwrap();
        assert_eq!(back, [record()]);
        let q = dir.path().join("r2.jsonl");
        write_results(&back, &q).unwrap();
        assert_eq!(std::fs::read(&q).unwrap(), first);
    }

    #[test]
    fn detections_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let b = BoxState::new([1.0, 2.0, 0.5], [1.5, 4.0, 1.5], 0.25)
            .with_score(0.5)
            .with_category("truck")
            .with_velocity(1.0, -1.0);
        let scenes = vec![Scene {
            id: "s".into(),
            frames: vec![DetectionFrame::new("0", 0.0, vec![b]), DetectionFrame::new("1", 0.5, vec![])],
        }];
        let p = dir.path().join("d.jsonl");
        write_detections(&scenes, &p).unwrap();
        assert_eq!(load_detections(&p).unwrap(), scenes);
    }
}
