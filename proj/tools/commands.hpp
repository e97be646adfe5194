#pragma once

#include <functional>

#include "CLI11.hpp"

namespace kstrip::cli {

using Action = std::function<void()>;

// Each registers one subcommand on `app`. Once parsing succeeds the chosen
// subcommand stores its work in `selected`.
void add_gen_data(CLI::App& app, Action& selected);
void add_train(CLI::App& app, Action& selected);
void add_eval(CLI::App& app, Action& selected);
void add_infer(CLI::App& app, Action& selected);
void add_inspect(CLI::App& app, Action& selected);

}  // namespace kstrip::cli
