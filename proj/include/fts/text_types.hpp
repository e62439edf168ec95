#pragma once

#include <string>

#include "fts/date.hpp"

namespace fts {

struct NewsItem {
    Timestamp timestamp;
    std::string source;
    std::string text;
};

}  // namespace fts
