#pragma once

#include <memory>
#include <string>

#include "annotate.hpp"

namespace httplib {
class Server;
}

namespace ck::annotate {

/// Builds the HTTP+JSON service over a store. The store must outlive the
/// server.
std::unique_ptr<httplib::Server> make_server(Store& store);

/// Blocks serving on host:port until the server is stopped.
void serve(Store& store, const std::string& host, int port);

}  // namespace ck::annotate
