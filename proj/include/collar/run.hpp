#pragma once

#include <iosfwd>
#include <string>

#include "collar/boundary.hpp"
#include "collar/config.hpp"
#include "collar/evolution.hpp"

namespace collar {

// Built-in initial data families. `perturbed` carries a traceless tangential
// k perturbation with an x3 bump vanishing at both faces; constraint
// violation is O(eps^2). Returns (g, k); v comes from the consistency
// condition at initialization.
void builtin_initial_data(const RunConfig& cfg, const Grid& grid, SymTensorField& g,
                          SymTensorField& k);

BoundaryData make_boundary_data(const RunConfig& cfg, const Grid& grid);

// Formatting used by every CSV writer: shortest decimal round trip capped at
// 17 significant digits.
std::string format_double(double x);
std::string diagnostics_header();
std::string diagnostics_row(const struct DiagnosticsRecord& rec);

void write_snapshot_field(std::ostream& os, const std::string& name, const ScalarField& f,
                          double t);

// Execute one mode: evolve | picard | mms | trace-check | compat-check |
// convergence-suite. Writes diagnostics.csv (or rates.csv), run_manifest.txt,
// and optional snapshots under cfg.output_dir. Throws the structured error
// types on failure; returns 0 on success.
int run_mode(const std::string& mode, const RunConfig& cfg);

} // namespace collar
