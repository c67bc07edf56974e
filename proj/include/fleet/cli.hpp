#pragma once

#include <ostream>

namespace fleet {

enum ExitCode : int { kExitOk = 0, kExitData = 1, kExitConfig = 2 };

// fleet <simulate|fit|predict|benchmark|analyze|decide|select-h>
//       --config cfg.json [--data data.csv] --out dir [--seed N]
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

} // namespace fleet
