#include "finloc/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "finloc/errors.hpp"

namespace finloc {

namespace {

void require_valid(const BoxCxCyWh& box, const char* who) {
  if (!is_valid_box(box)) {
    throw InvalidInputError(std::string(who) +
                            ": box must be finite with positive size");
  }
}

double area(const BoxCxCyWh& box) { return box.w * box.h; }

}  // namespace

bool is_valid_box(const BoxCxCyWh& box) {
  return std::isfinite(box.cx) && std::isfinite(box.cy) &&
         std::isfinite(box.w) && std::isfinite(box.h) && box.w > 0.0 &&
         box.h > 0.0;
}

EdgeDistances to_edge_distances(const BoxCxCyWh& box) {
  require_valid(box, "to_edge_distances");
  EdgeDistances d;
  d.top = box.h / 2.0;
  d.bottom = box.h / 2.0;
  d.left = box.w / 2.0;
  d.right = box.w / 2.0;
  d.anchor_x = box.cx;
  d.anchor_y = box.cy;
  return d;
}

BoxCxCyWh from_edge_distances(const EdgeDistances& d) {
  const double fields[] = {d.top, d.bottom, d.left, d.right, d.anchor_x, d.anchor_y};
  for (double f : fields) {
    if (!std::isfinite(f)) {
      throw InvalidInputError("from_edge_distances: non-finite distance");
    }
  }
  const double x_min = d.anchor_x - d.left;
  const double x_max = d.anchor_x + d.right;
  const double y_min = d.anchor_y - d.top;
  const double y_max = d.anchor_y + d.bottom;
  if (x_max <= x_min || y_max <= y_min) {
    throw DegenerateBoxError("from_edge_distances: side collapsed to zero or below");
  }
  BoxCxCyWh box;
  box.cx = (x_min + x_max) / 2.0;
  box.cy = (y_min + y_max) / 2.0;
  box.w = x_max - x_min;
  box.h = y_max - y_min;
  return box;
}

double iou(const BoxCxCyWh& a, const BoxCxCyWh& b) {
  require_valid(a, "iou");
  require_valid(b, "iou");
  const double ix = std::min(a.cx + a.w / 2.0, b.cx + b.w / 2.0) -
                    std::max(a.cx - a.w / 2.0, b.cx - b.w / 2.0);
  const double iy = std::min(a.cy + a.h / 2.0, b.cy + b.h / 2.0) -
                    std::max(a.cy - a.h / 2.0, b.cy - b.h / 2.0);
  if (ix <= 0.0 || iy <= 0.0) {
    return 0.0;
  }
  const double inter = ix * iy;
  return inter / (area(a) + area(b) - inter);
}

double giou(const BoxCxCyWh& a, const BoxCxCyWh& b) {
  require_valid(a, "giou");
  require_valid(b, "giou");
  const double ix = std::min(a.cx + a.w / 2.0, b.cx + b.w / 2.0) -
                    std::max(a.cx - a.w / 2.0, b.cx - b.w / 2.0);
  const double iy = std::min(a.cy + a.h / 2.0, b.cy + b.h / 2.0) -
                    std::max(a.cy - a.h / 2.0, b.cy - b.h / 2.0);
  const double inter = (ix > 0.0 && iy > 0.0) ? ix * iy : 0.0;
  const double uni = area(a) + area(b) - inter;

  // smallest enclosing box
  const double ex = std::max(a.cx + a.w / 2.0, b.cx + b.w / 2.0) -
                    std::min(a.cx - a.w / 2.0, b.cx - b.w / 2.0);
  const double ey = std::max(a.cy + a.h / 2.0, b.cy + b.h / 2.0) -
                    std::min(a.cy - a.h / 2.0, b.cy - b.h / 2.0);
  const double enclosing = ex * ey;
  return inter / uni - (enclosing - uni) / enclosing;
}

}  // namespace finloc
