#pragma once

#include <vector>

#include "tarpit/ui_model.hpp"

namespace tarpit_test {

// Independent O(n^2) visibility filter used as the comparison oracle: a widget
// survives iff it is enabled and no other enabled widget's rectangle contains
// its midpoint.
std::vector<int> oracle_surviving_ids(const std::vector<tarpit::Widget>& widgets);

}  // namespace tarpit_test
