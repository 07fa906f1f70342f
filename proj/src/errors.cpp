#include "qpsim/errors.hpp"

namespace qpsim {

namespace {
std::string join(const std::vector<std::string>& items) {
    std::string out = "configuration invalid";
    for (const auto& s : items) out += "\n  " + s;
    return out;
}
}  // namespace

ValidationError::ValidationError(std::vector<std::string> problems)
    : Error(join(problems)), problems_(std::move(problems)) {}

}  // namespace qpsim
