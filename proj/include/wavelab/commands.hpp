#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace wavelab {

const std::vector<std::string>& command_names();

/// Runs one lab command on the config file and writes its CSVs and manifest.txt to out_dir
/// (the config's `out` key when out_dir is empty). Returns the process exit code:
/// 0 ok, 2 config error, 3 numerical failure, 4 demo assertion failure.
int run_command(const std::string& command, const std::string& config_path, const std::string& out_dir,
                std::ostream& log);

}  // namespace wavelab
