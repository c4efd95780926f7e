//! C interface to the tracker and the box-overlap kernels.
//!
//! Every function returns a [`PmStatus`]. On failure the message is kept per
//! thread and can be read with [`pm_last_error_message`]. Panics are caught
//! at the boundary and reported as [`PmStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use polymot::config::TrackerConfig;
use polymot::geometry::{self, BoxState};
use polymot::lifecycle::{ResultRecord, Tracker};
use polymot::preprocessing::DetectionFrame;
use polymot::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    NonFinite = 4,
    OutOfOrderFrame = 5,
    IndexOutOfRange = 6,
    Io = 7,
    Internal = 8,
    Panic = 9,
}

/// Oriented box: center, size (`w`, `l`, `h`) and yaw about +z.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PmBox {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub w: f64,
    pub l: f64,
    pub h: f64,
    pub yaw: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PmDetection {
    pub bbox: PmBox,
    pub vx: f64,
    pub vy: f64,
    /// Nonzero when `vx`, `vy` carry a measured velocity.
    pub has_velocity: u8,
    pub score: f64,
    /// NUL-terminated UTF-8 category name.
    pub category: *const c_char,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PmTrackedBox {
    pub id: u64,
    pub bbox: PmBox,
    pub vx: f64,
    pub vy: f64,
    pub score: f64,
}

/// Opaque tracker handle.
pub struct PmTracker {
    tracker: Tracker,
    frames: u64,
    output: Vec<ResultRecord>,
    categories: Vec<CString>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(e: &Error) -> PmStatus {
    match e {
        Error::Config(_) => PmStatus::Config,
        Error::Schema { .. } => PmStatus::InvalidArgument,
        Error::NonFinite(_) => PmStatus::NonFinite,
        Error::OutOfOrderFrame { .. } => PmStatus::OutOfOrderFrame,
        Error::Io { .. } => PmStatus::Io,
        _ => PmStatus::Internal,
    }
}

fn fail(status: PmStatus, msg: impl Into<String>) -> PmStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> PmStatus) -> PmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(PmStatus::Panic, msg)
        }
    }
}

fn to_state(b: &PmBox) -> BoxState {
    BoxState::new([b.x, b.y, b.z], [b.w, b.l, b.h], b.yaw)
}

fn from_record(r: &ResultRecord) -> PmTrackedBox {
    PmTrackedBox {
        id: r.tracking_id,
        bbox: PmBox {
            x: r.x,
            y: r.y,
            z: r.z,
            w: r.w,
            l: r.l,
            h: r.h,
            yaw: r.yaw,
        },
        vx: r.vx,
        vy: r.vy,
        score: r.tracking_score,
    }
}

/// Message for the last failed call on this thread. Valid until the next
/// failing call on the same thread. Empty when nothing failed yet.
#[no_mangle]
pub extern "C" fn pm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates a tracker. `config_toml` may be NULL for the default profile.
///
/// # Safety
/// `config_toml` is NULL or a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn pm_tracker_new(config_toml: *const c_char, out: *mut *mut PmTracker) -> PmStatus {
    guard(|| {
        if out.is_null() {
            return fail(PmStatus::NullPointer, "out is NULL");
        }
        *out = ptr::null_mut();
        let cfg = if config_toml.is_null() {
            TrackerConfig::default()
        } else {
            let text = match CStr::from_ptr(config_toml).to_str() {
                Ok(t) => t,
                Err(_) => return fail(PmStatus::InvalidArgument, "config is not UTF-8"),
            };
            match TrackerConfig::from_toml_str(text) {
                Ok(c) => c,
                Err(e) => return fail(status_of(&e), e.to_string()),
            }
        };
        match Tracker::new(cfg) {
            Ok(tracker) => {
                *out = Box::into_raw(Box::new(PmTracker {
                    tracker,
                    frames: 0,
                    output: Vec::new(),
                    categories: Vec::new(),
                }));
                PmStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// # Safety
/// `tracker` is NULL or came from [`pm_tracker_new`] and was not freed.
#[no_mangle]
pub unsafe extern "C" fn pm_tracker_free(tracker: *mut PmTracker) {
    if !tracker.is_null() {
        drop(Box::from_raw(tracker));
    }
}

/// Feeds one frame. Timestamps are seconds and must increase strictly.
/// `detections` may be NULL when `count` is 0.
///
/// # Safety
/// `tracker` is a live handle; `detections` points to `count` elements
/// whose `category` strings are valid for the duration of the call.
#[no_mangle]
pub unsafe extern "C" fn pm_tracker_step(
    tracker: *mut PmTracker,
    timestamp: f64,
    detections: *const PmDetection,
    count: usize,
) -> PmStatus {
    guard(|| {
        let Some(t) = tracker.as_mut() else {
            return fail(PmStatus::NullPointer, "tracker is NULL");
        };
        if detections.is_null() && count > 0 {
            return fail(PmStatus::NullPointer, "detections is NULL");
        }
        let raw = if count == 0 { &[][..] } else { std::slice::from_raw_parts(detections, count) };
        let mut dets = Vec::with_capacity(count);
        for (i, d) in raw.iter().enumerate() {
            if d.category.is_null() {
                return fail(PmStatus::NullPointer, format!("detection {i}: category is NULL"));
            }
            let Ok(cat) = CStr::from_ptr(d.category).to_str() else {
                return fail(PmStatus::InvalidArgument, format!("detection {i}: category is not UTF-8"));
            };
            let mut b = to_state(&d.bbox).with_score(d.score).with_category(cat);
            if d.has_velocity != 0 {
                b = b.with_velocity(d.vx, d.vy);
            }
            dets.push(b);
        }
        let frame = DetectionFrame::new(t.frames.to_string(), timestamp, dets);
        match t.tracker.step(&frame) {
            Ok(records) => {
                t.frames += 1;
                t.categories = records
                    .iter()
                    .map(|r| CString::new(r.category.replace('\0', " ")).unwrap_or_default())
                    .collect();
                t.output = records;
                PmStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// Number of boxes reported by the last successful step.
///
/// # Safety
/// `tracker` is NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pm_tracker_output_count(tracker: *const PmTracker) -> usize {
    tracker.as_ref().map_or(0, |t| t.output.len())
}

/// # Safety
/// `tracker` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn pm_tracker_output(tracker: *const PmTracker, index: usize, out: *mut PmTrackedBox) -> PmStatus {
    guard(|| {
        let Some(t) = tracker.as_ref() else {
            return fail(PmStatus::NullPointer, "tracker is NULL");
        };
        if out.is_null() {
            return fail(PmStatus::NullPointer, "out is NULL");
        }
        match t.output.get(index) {
            Some(r) => {
                *out = from_record(r);
                PmStatus::Ok
            }
            None => fail(PmStatus::IndexOutOfRange, format!("index {index} >= {}", t.output.len())),
        }
    })
}

/// Category of output box `index`, owned by the tracker until its next step.
/// NULL when the index is out of range.
///
/// # Safety
/// `tracker` is NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pm_tracker_output_category(tracker: *const PmTracker, index: usize) -> *const c_char {
    tracker
        .as_ref()
        .and_then(|t| t.categories.get(index))
        .map_or(ptr::null(), |c| c.as_ptr())
}

unsafe fn pair_kernel(a: *const PmBox, b: *const PmBox, out: *mut f64, f: fn(&BoxState, &BoxState) -> f64) -> PmStatus {
    guard(|| {
        let (Some(a), Some(b)) = (a.as_ref(), b.as_ref()) else {
            return fail(PmStatus::NullPointer, "box is NULL");
        };
        if out.is_null() {
            return fail(PmStatus::NullPointer, "out is NULL");
        }
        let (a, b) = (to_state(a), to_state(b));
        for s in [&a, &b] {
            if let Err(e) = s.validate() {
                return fail(PmStatus::InvalidArgument, e.to_string());
            }
        }
        *out = f(&a, &b);
        PmStatus::Ok
    })
}

/// # Safety
/// `a` and `b` are readable; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn pm_iou_bev(a: *const PmBox, b: *const PmBox, out: *mut f64) -> PmStatus {
    pair_kernel(a, b, out, geometry::iou_bev)
}

/// # Safety
/// `a` and `b` are readable; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn pm_giou_bev(a: *const PmBox, b: *const PmBox, out: *mut f64) -> PmStatus {
    pair_kernel(a, b, out, geometry::giou_bev)
}

/// # Safety
/// `a` and `b` are readable; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn pm_giou_3d(a: *const PmBox, b: *const PmBox, out: *mut f64) -> PmStatus {
    pair_kernel(a, b, out, geometry::giou_3d)
}
