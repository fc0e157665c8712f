#pragma once

namespace rdbench {

// Front-end entry point. Exit codes: 0 success, 1 validation/usage error,
// 2 external-tool failure.
int cli_main(int argc, char** argv);

}  // namespace rdbench
