//! Bundle loading and artifact writing.

mod bundle;
mod motion;
mod ply;
pub mod tensor;

pub use bundle::{
    load_bundle, write_bundle, FileTable, InputBundle, KeyframeFiles, Manifest, MANIFEST_FILE,
    MANIFEST_VERSION,
};
pub use motion::{
    read_json, read_motion_json, to_json_bytes, write_files_atomically, write_json,
    write_motion_json, MotionFile, RunReport, TruthFile, MOTION_FILE, REPORT_FILE, SCENE_FILE,
    TRUTH_FILE,
};
pub use ply::{encode_scene_ply, ply_header, write_scene_ply, VERTEX_RECORD_BYTES};
