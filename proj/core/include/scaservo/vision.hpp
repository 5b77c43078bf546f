#pragma once

#include "scaservo/rod_model.hpp"

#include <optional>
#include <vector>

namespace scaservo {

// Pinhole camera.  The pose maps camera coordinates to world coordinates;
// camera axes are x = image right, y = image down, z = optical axis
// (points with positive camera-z are in front of the lens).
struct CameraSpec {
  Pose pose;
  double focal_px = 500.0;
  int width = 640;
  int height = 480;

  Vec3 world_to_camera(const Vec3& p_world) const {
    return pose.orientation.transpose() * (p_world - pose.position);
  }
};

struct PixelPoint {
  double u = 0.0;
  double v = 0.0;
};

// Projects a world point.  Returns nothing when the point is at or behind
// the camera plane (depth <= 0); that is an expected outcome, not an error.
std::optional<PixelPoint> project_point(const CameraSpec& cam,
                                        const Vec3& p_world);

// What the geometric detector reports for one sphere in one camera.
struct Detection {
  PixelPoint centroid;                       // projected center
  double u_min = 0, v_min = 0, u_max = 0, v_max = 0;  // bbox clipped to frame
  bool visible = false;

  double bbox_width() const { return u_max - u_min; }
  double bbox_height() const { return v_max - v_min; }
};

// Ideal detection of a sphere of radius r centered at `center`: centroid is
// the projected center, bbox half-extent is focal * r / depth, clipped to
// the frame.  Visible means the centroid lies inside the frame and the
// center is deeper than one radius (otherwise the lens would be inside the
// sphere or the sphere behind the camera).
Detection sphere_detection(const CameraSpec& cam, const Vec3& center,
                           double radius);

// Camera rigidly attached to the arm tip: pose follows the tip, intrinsics
// come from the template.
CameraSpec distal_camera(const Pose& tip, const CameraSpec& intrinsics);

// Pixel distance from a detection centroid to the frame center.
double center_distance_px(const CameraSpec& cam, const Detection& det);

// Everything the two cameras can be asked about in one scene.
struct Scene {
  std::vector<Vec3> marker_centers;  // arm markers, world frame
  double marker_radius = 0.01;
  Vec3 target_center = Vec3::Zero();
  double target_radius = 0.015;
};

// The three detections the environment feeds into the observation: arm tip
// and target in the base camera, target in the tip camera.
struct SceneObservation {
  Detection tip_in_base;
  Detection target_in_base;
  Detection target_in_distal;
};

SceneObservation observe_scene(const Scene& scene, const CameraSpec& base_cam,
                               const CameraSpec& distal_cam);

// Base camera placement helper: position plus downward pitch (rotation about
// the image-right axis) and yaw about the world z axis.  At zero pitch and
// yaw the optical axis looks along world +y, image-right along world +x and
// image-down along world -z (a level, upright camera); pitching down tilts
// the optical axis toward world -z.
CameraSpec make_base_camera(const Vec3& position, double pitch_down_deg,
                            double yaw_deg, double focal_px, int width,
                            int height);

}  // namespace scaservo
