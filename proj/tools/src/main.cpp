#include <iostream>
#include <variant>

#include "wdvvtool/cli.hpp"

int main(int argc, char** argv) {
  auto parsed = wdvvtool::parse_args(argc, argv, std::cout);
  if (const auto* status = std::get_if<int>(&parsed)) return *status;
  if (const auto* usage = std::get_if<wdvvtool::UsageError>(&parsed)) {
    std::cerr << "wdvv: " << usage->message << "\n";
    return wdvvtool::kExitUsage;
  }
  return wdvvtool::run(std::get<wdvvtool::RunConfig>(parsed), std::cout, std::cerr);
}
