//! The bundled home-automation case study.

pub const LIGHT_CONTROLLER: &str = include_str!("../corpus/case_study/light_controller.mach");
pub const HOME_CONTROLLER: &str = include_str!("../corpus/case_study/home_controller.mach");
pub const BEFORE_MANIFEST: &str = include_str!("../corpus/case_study/before.comp");
pub const AFTER_MANIFEST: &str = include_str!("../corpus/case_study/after.comp");
pub const PROPERTIES: &str = include_str!("../corpus/case_study/case_study.props");

/// Directory holding the case-study files in the source tree.
pub fn case_study_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus/case_study")
}
