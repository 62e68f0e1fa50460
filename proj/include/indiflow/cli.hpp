#pragma once

namespace indiflow {

/// Batch front door. Exit codes: 0 success, 2 configuration error,
/// 3 run failure (numerical divergence), 4 assertion failure (analyze --assert).
int run_cli(int argc, const char* const* argv);

}  // namespace indiflow
