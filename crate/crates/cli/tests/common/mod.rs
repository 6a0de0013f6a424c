// SPDX-License-Identifier: Apache-2.0

//! Shared fixtures: paths, a scripted model for the diamond design, and a
//! configuration that runs the stub checker.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rtlsmith::config::PipelineConfig;
use rtlsmith::ec::{EcRunner, ToolProfile};
use rtlsmith::gateway::{Purpose, ScriptRule, ScriptedBackend};
use rtlsmith::DesignInput;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").canonicalize().expect("fixtures directory")
}

pub fn design_input(dir: &str, top: &str) -> DesignInput {
    let base = fixtures().join("designs").join(dir);
    DesignInput {
        design_name: dir.to_string(),
        top_function: top.to_string(),
        c_source: std::fs::read_to_string(base.join("design.c")).unwrap(),
        spec_text: std::fs::read_to_string(base.join("spec.md")).unwrap(),
    }
}

/// Hand-enumerated call edges of a fixture design.
pub fn oracle_edges(dir: &str) -> Vec<(String, String)> {
    let text = std::fs::read_to_string(fixtures().join("designs").join(dir).join("edges.txt")).unwrap();
    let mut edges: Vec<(String, String)> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let mut it = l.split_whitespace();
            (it.next().unwrap().to_string(), it.next().unwrap().to_string())
        })
        .collect();
    edges.sort();
    edges
}

pub fn stub_command() -> Vec<String> {
    let stub = fixtures().join("ec/stub_ec.sh");
    [stub.to_str().unwrap(), "{harness}", "{bundle}", "{rtl_list}", "--module", "{top_module}", "--bound", "{bound}"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

pub fn stub_runner() -> EcRunner {
    EcRunner::new(ToolProfile::builtin("hw-cbmc").unwrap(), Some(stub_command()), 1, 20.0, 1)
}

/// Configuration for library-level runs with the stub checker.
pub fn stub_config(workspace: &Path) -> PipelineConfig {
    let mut c = PipelineConfig::default();
    c.workspace = workspace.to_path_buf();
    c.replay_dir = Some(fixtures().join("replay/diamond"));
    c.ec.command = Some(stub_command());
    c.ec.timeout_secs = 20.0;
    c.frozen_clock = true;
    c
}

fn harness(task: &str, input_decl: &str, input_ty: &str, inputs: &[&str], call: &str) -> String {
    let fields: String = inputs.iter().map(|i| format!("    {input_ty} {i};\n")).collect();
    let assume: Vec<String> = inputs.iter().map(|i| format!("rtl.{i} == {i}")).collect();
    format!(
        "#include <assert.h>\n#include <stdint.h>\n\nstruct module_{task} {{\n{fields}    uint8_t result;\n}};\nextern struct module_{task} rtl;\n\n{input_decl};\n\nint main(void)\n{{\n    {input_ty} {};\n    __CPROVER_assume({});\n    uint8_t c_result = {call};\n    assert(c_result == rtl.result);\n    return 0;\n}}\n",
        inputs.join(", "),
        assume.join(" && ")
    )
}

fn generation(rtl: &str, harness: &str) -> String {
    format!("Here is the module.\n```RTL\n{rtl}```\n```HARNESS\n{harness}```\n")
}

pub const CLAMP8_RTL: &str = "module clamp8 (
    input  wire [15:0] v,
    output wire [7:0]  result
);
    assign result = (v > 16'd255) ? 8'hFF : v[7:0];
endmodule
";

pub const SCALE_A_RTL: &str = "module scale_a (
    input  wire [7:0] x,
    output wire [7:0] result
);
    wire [15:0] prod = {8'd0, x} * 16'd2; // ec-stub: cex_scale_a
    clamp8 u_clamp (.v(prod), .result(result));
endmodule
";

pub const SCALE_B_RTL: &str = "module scale_b (
    input  wire [7:0] x,
    output wire [7:0] result
);
    wire [15:0] sum = {8'd0, x} + 16'd100;
    clamp8 u_clamp (.v(sum), .result(result));
endmodule
";

pub const TOP_RTL: &str = "module diamond_top (
    input  wire [7:0] x,
    input  wire [7:0] y,
    output wire [7:0] result
);
    wire [7:0] ra;
    wire [7:0] rb;
    scale_a u_a (.x(x), .result(ra));
    scale_b u_b (.x(y), .result(rb));
    assign result = ra ^ rb;
endmodule
";

/// Flat single-module answer of the monolithic baseline; never passes.
pub const MONO_RTL: &str = "module diamond_top (
    input  wire [7:0] x,
    input  wire [7:0] y,
    output wire [7:0] result
);
    wire [15:0] a3 = {8'd0, x} * 16'd3;
    wire [15:0] b100 = {8'd0, y} + 16'd100;
    wire [7:0] ra = a3[7:0];
    wire [7:0] rb = (b100 > 16'd255) ? 8'hFF : b100[7:0];
    assign result = ra ^ rb; // ec-stub: cex
endmodule
";

fn patch(rationale: &str, anchor: &str, replacement: &str) -> String {
    format!("{rationale}\nTARGET: rtl\n```ANCHOR\n{anchor}\n```\n```REPLACEMENT\n{replacement}\n```\n")
}

/// Responses for the diamond design. Every task passes on its first
/// attempt except `scale_a`: a counterexample, then a syntax error, then a
/// pass after the second repair. The monolithic baseline never passes.
pub fn diamond_rules() -> Vec<ScriptRule> {
    let spec = |f: &str, what: &str| {
        ScriptRule::new(
            Purpose::SpecRefine,
            &[&format!("C reference bundle for `{f}`")],
            &[&format!("The module `{f}` {what}. It is purely combinational.\n")],
        )
    };
    let gen = |task: &str, rtl: &str, h: &str| {
        ScriptRule::new(
            Purpose::InitialGen,
            &[&format!("Module to implement: `{task}`"), "Verified submodules"],
            &[&generation(rtl, h)],
        )
    };
    let clamp_h = harness("clamp8", "uint8_t clamp8(uint16_t v)", "uint16_t", &["v"], "clamp8(v)");
    let a_h = harness("scale_a", "uint8_t scale_a(uint8_t x)", "uint8_t", &["x"], "scale_a(x)");
    let b_h = harness("scale_b", "uint8_t scale_b(uint8_t x)", "uint8_t", &["x"], "scale_b(x)");
    let top_h = harness(
        "diamond_top",
        "uint8_t diamond_top(uint8_t x, uint8_t y)",
        "uint8_t",
        &["x", "y"],
        "diamond_top(x, y)",
    );
    let bad = "    wire [15:0] prod = {8'd0, x} * 16'd2; // ec-stub: cex_scale_a";
    let typo = "    wire [15:0] prod = {8'd0, x} * 16'd3 // ec-stub: syntax";
    let fixed = "    wire [15:0] prod = {8'd0, x} * 16'd3;";
    let mono_a = "    assign result = ra ^ rb; // ec-stub: cex";
    let mono_b = "    assign result = rb ^ ra; // ec-stub: cex";
    vec![
        spec("clamp8", "saturates the 16-bit input `v` to the 8-bit output `result`"),
        spec("scale_a", "outputs clamp8(3 * x) on `result`"),
        spec("scale_b", "outputs clamp8(x + 100) on `result`"),
        spec("diamond_top", "outputs scale_a(x) XOR scale_b(y) on `result`"),
        ScriptRule::new(Purpose::InitialGen, &["Does this module need sequential logic"], &["KIND=COMB"]),
        ScriptRule::new(
            Purpose::InitialGen,
            &["Module to implement: `diamond_top`", "Dependencies: none"],
            &[&generation(MONO_RTL, &top_h)],
        ),
        ScriptRule::new(Purpose::InitialGen, &["Module to implement: `clamp8`"], &[&generation(CLAMP8_RTL, &clamp_h)]),
        gen("scale_a", SCALE_A_RTL, &a_h),
        gen("scale_b", SCALE_B_RTL, &b_h),
        gen("diamond_top", TOP_RTL, &top_h),
        ScriptRule::new(
            Purpose::Repair,
            &["for module `scale_a`", "Repair iteration 1 of"],
            &[&patch("The C model triples x.", bad, typo)],
        ),
        ScriptRule::new(
            Purpose::Repair,
            &["for module `scale_a`", "Repair iteration 2 of"],
            &[&patch("Missing semicolon.", typo, fixed)],
        ),
        ScriptRule::new(
            Purpose::Repair,
            &["for module `diamond_top`"],
            &[
                &patch("Swap the operands.", mono_a, mono_b),
                &patch("Swap the operands back.", mono_b, mono_a),
                &patch("Swap the operands.", mono_a, mono_b),
                &patch("Swap the operands back.", mono_b, mono_a),
                &patch("Swap the operands.", mono_a, mono_b),
            ],
        ),
    ]
}

pub fn diamond_backend() -> Arc<ScriptedBackend> {
    Arc::new(ScriptedBackend::new(diamond_rules()))
}
