#include "hloc/ip_address.hpp"

#include <arpa/inet.h>

#include <string>

namespace hloc {

std::optional<IpAddress> IpAddress::parse(std::string_view text)
{
    const std::string s(text);
    IpAddress ip;
    if (inet_pton(AF_INET, s.c_str(), ip.bytes_.data()) == 1) {
        ip.family_ = Family::V4;
        return ip;
    }
    if (inet_pton(AF_INET6, s.c_str(), ip.bytes_.data()) == 1) {
        ip.family_ = Family::V6;
        return ip;
    }
    return std::nullopt;
}

std::string IpAddress::to_string() const
{
    char buf[INET6_ADDRSTRLEN] = {};
    inet_ntop(is_v4() ? AF_INET : AF_INET6, bytes_.data(), buf, sizeof buf);
    return buf;
}

}  // namespace hloc
