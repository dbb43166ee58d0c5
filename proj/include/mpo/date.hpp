#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace mpo {

using Date = std::chrono::sys_days;

/// Parses `YYYY-MM-DD`. Throws ParseError on anything else.
Date parse_date(std::string_view text);

std::string format_date(Date d);

/// `YYYY-MM` bucket used for monthly weight reports.
std::string format_month(Date d);

bool is_weekday(Date d);

/// The next Monday-to-Friday date strictly after `d`.
Date next_business_day(Date d);

}  // namespace mpo
