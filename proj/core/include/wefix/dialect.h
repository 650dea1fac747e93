#ifndef WEFIX_DIALECT_H_
#define WEFIX_DIALECT_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace wefix {

// Test frameworks whose sources the tool can read and write.
enum class Dialect { kCypress, kSelenium };

class UnsupportedDialect : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::string_view DialectName(Dialect dialect);

// Accepts "cypress", "selenium" and "selenium-webdriver".
Dialect ParseDialect(std::string_view name);

}  // namespace wefix

#endif  // WEFIX_DIALECT_H_
