// SPDX-License-Identifier: Apache-2.0

//! Prompt and feedback templates. Builtins ship under `assets/`; a
//! configured directory may override any of them by file name.

use std::path::Path;

macro_rules! templates {
    ($($field:ident => $file:literal,)*) => {
        /// Every template the pipeline renders.
        #[derive(Debug, Clone, PartialEq, Eq)]
        pub struct Prompts {
            $(pub $field: String,)*
        }

        impl Prompts {
            pub fn builtin() -> Self {
                Prompts { $($field: include_str!(concat!("../assets/", $file)).to_string(),)* }
            }

            /// Builtins, with any same-named file in `dir` (or its
            /// `prompts/` and `feedback/` subdirectories) taking precedence.
            pub fn with_overrides(dir: &Path) -> std::io::Result<Self> {
                let mut p = Self::builtin();
                $(
                    let rel = Path::new($file);
                    let name = rel.file_name().expect("template file name");
                    for candidate in [dir.join(rel), dir.join(name)] {
                        if candidate.is_file() {
                            p.$field = std::fs::read_to_string(&candidate)?;
                            break;
                        }
                    }
                )*
                Ok(p)
            }

            pub const FILES: &'static [&'static str] = &[$($file,)*];
        }
    };
}

templates! {
    spec_refine_system => "prompts/spec_refine.system.txt",
    spec_refine_user => "prompts/spec_refine.user.txt",
    timing_system => "prompts/timing.system.txt",
    timing_user => "prompts/timing.user.txt",
    timing_retry => "prompts/timing.retry.txt",
    generate_system => "prompts/generate.system.txt",
    generate_user => "prompts/generate.user.txt",
    generate_retry => "prompts/generate.retry.txt",
    repair_system => "prompts/repair.system.txt",
    repair_user => "prompts/repair.user.txt",
    repair_retry => "prompts/repair.retry.txt",
    feedback_syntax => "feedback/syntax.txt",
    feedback_counterexample => "feedback/counterexample.txt",
    feedback_counterexample_raw => "feedback/counterexample_raw.txt",
    feedback_timeout => "feedback/timeout.txt",
    feedback_tool_error => "feedback/tool_error.txt",
}

impl Default for Prompts {
    fn default() -> Self {
        Self::builtin()
    }
}
