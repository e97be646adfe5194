#include <algorithm>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "commands.hpp"
#include "kstrip/error.hpp"
#include "kstrip/runtime.hpp"
#include "manifest.hpp"

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// "key = value" lines become "--key=value" tokens. '#' starts a comment,
// underscores in keys read as dashes.
std::vector<std::string> config_tokens(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw kstrip::ConfigError("cannot read config file '" + path + "'");
  std::vector<std::string> tokens;
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw kstrip::ConfigError(path + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front()) {
      value = value.substr(1, value.size() - 2);
    }
    std::replace(key.begin(), key.end(), '_', '-');
    if (key.empty() || key == "config") {
      throw kstrip::ConfigError(path + ":" + std::to_string(lineno) + ": invalid key");
    }
    tokens.push_back("--" + key + "=" + value);
  }
  return tokens;
}

// Splices the tokens of a --config file in front of the command line flags
// of the subcommand, so that explicit flags override them.
std::vector<std::string> expand_config(std::vector<std::string> args, const CLI::App& app) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    }
  }
  if (path.empty()) return args;
  const auto sub = std::find_if(args.begin(), args.end(), [&](const std::string& a) {
    for (const CLI::App* s : app.get_subcommands({})) {
      if (s->get_name() == a) return true;
    }
    return false;
  });
  if (sub == args.end()) return args;
  const auto tokens = config_tokens(path);
  args.insert(sub + 1, tokens.begin(), tokens.end());
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  kstrip::tune_allocator();

  CLI::App app{"Skull stripping on complex-valued k-space with a complex U-Net", "kstrip"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)->always_capture_default();
  app.require_subcommand(1);
  app.set_version_flag("--version", kstrip::cli::version_string());

  kstrip::cli::Action selected;
  kstrip::cli::add_gen_data(app, selected);
  kstrip::cli::add_train(app, selected);
  kstrip::cli::add_eval(app, selected);
  kstrip::cli::add_infer(app, selected);
  kstrip::cli::add_inspect(app, selected);

  try {
    std::vector<std::string> args = expand_config({argv + 1, argv + argc}, app);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const kstrip::ConfigError& e) {
    std::fprintf(stderr, "kstrip: %s\n", e.what());
    return 2;
  }

  try {
    kstrip::thread_limit();
    selected();
  } catch (const kstrip::ConfigError& e) {
    std::fprintf(stderr, "kstrip: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "kstrip: %s\n", e.what());
    return 1;
  }
  return 0;
}
