#include <iostream>

#include "mosanet/common/error.hpp"
#include "mosanet/common/runtime.hpp"
#include "run.hpp"

int main(int argc, char** argv) {
  using namespace mosanet::cli;
  mosanet::configure_allocator();
  CLI::App app{"mosanet: speech assessment and assessment-aware enhancement"};
  app.set_version_flag("--version", std::string(MOSANET_VERSION));
  app.require_subcommand(1);
  Action action;
  register_prep(app, action);
  register_label(app, action);
  register_train(app, action);
  register_adapt(app, action);
  register_eval(app, action);
  register_enhance(app, action);
  register_plot(app, action);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  const std::string name = app.get_subcommands().front()->get_name();
  try {
    action();
  } catch (const mosanet::UsageError& e) {
    std::cerr << "mosanet " << name << ": error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "mosanet " << name << ": failure: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
