#include "scaservo/vision.hpp"

#include <algorithm>
#include <cmath>

namespace scaservo {

std::optional<PixelPoint> project_point(const CameraSpec& cam,
                                        const Vec3& p_world) {
  const Vec3 pc = cam.world_to_camera(p_world);
  if (pc.z() <= 0.0) return std::nullopt;
  return PixelPoint{cam.width / 2.0 + cam.focal_px * pc.x() / pc.z(),
                    cam.height / 2.0 + cam.focal_px * pc.y() / pc.z()};
}

Detection sphere_detection(const CameraSpec& cam, const Vec3& center,
                           double radius) {
  Detection det;
  const Vec3 pc = cam.world_to_camera(center);
  // Behind the lens, or so close the camera sits inside the sphere: report
  // nothing rather than a spurious box.
  if (pc.z() <= radius) return det;

  det.centroid = PixelPoint{cam.width / 2.0 + cam.focal_px * pc.x() / pc.z(),
                            cam.height / 2.0 + cam.focal_px * pc.y() / pc.z()};
  const double half_px = cam.focal_px * radius / pc.z();
  det.u_min = std::clamp(det.centroid.u - half_px, 0.0, double(cam.width));
  det.u_max = std::clamp(det.centroid.u + half_px, 0.0, double(cam.width));
  det.v_min = std::clamp(det.centroid.v - half_px, 0.0, double(cam.height));
  det.v_max = std::clamp(det.centroid.v + half_px, 0.0, double(cam.height));
  det.visible = det.centroid.u >= 0.0 && det.centroid.u <= cam.width &&
                det.centroid.v >= 0.0 && det.centroid.v <= cam.height;
  return det;
}

CameraSpec distal_camera(const Pose& tip, const CameraSpec& intrinsics) {
  CameraSpec cam = intrinsics;
  cam.pose = tip;
  return cam;
}

double center_distance_px(const CameraSpec& cam, const Detection& det) {
  const double du = det.centroid.u - cam.width / 2.0;
  const double dv = det.centroid.v - cam.height / 2.0;
  return std::hypot(du, dv);
}

SceneObservation observe_scene(const Scene& scene, const CameraSpec& base_cam,
                               const CameraSpec& distal_cam) {
  SceneObservation obs;
  if (!scene.marker_centers.empty()) {
    obs.tip_in_base =
        sphere_detection(base_cam, scene.marker_centers.back(), scene.marker_radius);
  }
  obs.target_in_base =
      sphere_detection(base_cam, scene.target_center, scene.target_radius);
  obs.target_in_distal =
      sphere_detection(distal_cam, scene.target_center, scene.target_radius);
  return obs;
}

CameraSpec make_base_camera(const Vec3& position, double pitch_down_deg,
                            double yaw_deg, double focal_px, int width,
                            int height) {
  const double phi = pitch_down_deg * M_PI / 180.0;
  const double psi = yaw_deg * M_PI / 180.0;

  // At zero pitch and yaw the optical axis is world +y, image-right is
  // world +x and image-down is world -z (level camera, upright image).
  // Pitching down tilts the optical axis from (0,1,0) toward -z about the
  // image-right axis; yaw then rotates the whole frame about world z.
  Mat3 pitch;
  const double c = std::cos(phi), s = std::sin(phi);
  pitch.col(0) = Vec3(1, 0, 0);   // image right
  pitch.col(1) = Vec3(0, -s, -c); // image down
  pitch.col(2) = Vec3(0, c, -s);  // optical axis

  Mat3 yaw;
  const double cy = std::cos(psi), sy = std::sin(psi);
  // clang-format off
  yaw << cy, -sy, 0,
         sy,  cy, 0,
          0,   0, 1;
  // clang-format on

  CameraSpec cam;
  cam.pose.position = position;
  cam.pose.orientation = yaw * pitch;
  cam.focal_px = focal_px;
  cam.width = width;
  cam.height = height;
  return cam;
}

}  // namespace scaservo
