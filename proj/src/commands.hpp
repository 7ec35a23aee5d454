#pragma once

namespace snell::cli {

// Entry point shared by the installed binary and the test harness.
int run_cli(int argc, char** argv);

} // namespace snell::cli
