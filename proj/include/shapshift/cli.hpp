#pragma once

namespace shapshift {

// Entry point behind the shapshift binary. Exit codes: 0 success,
// 2 usage/validation error, 3 explanation infeasible (undefined
// conditional). Errors print one machine-parseable line to stderr:
// "error: <code>: <message>".
int run_cli(int argc, const char* const* argv);

}  // namespace shapshift
