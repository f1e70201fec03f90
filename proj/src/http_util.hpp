#pragma once

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <string>
#include <string_view>

namespace futuremind::detail {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;    // always starts with '/'
};

inline SplitUrl split_url(std::string_view url) {
    auto scheme_end = url.find("://");
    auto host_begin = scheme_end == std::string_view::npos ? 0 : scheme_end + 3;
    auto slash = url.find('/', host_begin);
    if (slash == std::string_view::npos) return {std::string(url), "/"};
    return {std::string(url.substr(0, slash)), std::string(url.substr(slash))};
}

}  // namespace futuremind::detail
