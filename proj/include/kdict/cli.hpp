#ifndef KDICT_CLI_HPP_INCLUDED
#define KDICT_CLI_HPP_INCLUDED

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace kdict {

/// Parses a flat config document: one `key = value` per line, `#` starts a
/// comment, blank lines are ignored, values may be double-quoted. Keys are
/// long option names (`lambda`, `fista-eta`, ...). Throws ConfigError on
/// malformed lines or repeated keys.
std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text);

/// Runs one command (`synth`, `gram`, `train`, `classify`, `eval`). `args`
/// excludes the program name. Returns 0 on success, 2 on configuration
/// errors and 1 on runtime failures; messages go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace kdict

#endif
