#pragma once

#include <string>
#include <vector>

namespace symdyn::cli {

int run(const std::vector<std::string>& args);

}  // namespace symdyn::cli
