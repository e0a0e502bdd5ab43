#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tiedlm::cli {

/// Runs one subcommand (train, eval, predict, subspace, sweep, grid). Returns the
/// process exit status; 0 iff every requested output was written.
int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

struct FlagDoc {
    std::string command;
    std::string flag;
    std::string description;
};

/// Every flag of every subcommand with its help text (used by the doc-coverage test).
std::vector<FlagDoc> flag_docs();

} // namespace tiedlm::cli
