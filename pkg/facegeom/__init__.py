"""
facegeom
Face alignment from eye landmarks and seven-region patch extraction
"""
from facegeom.align import AlignmentSpec, AlignmentTransform, align_face
from facegeom.image_io import FaceImage, load_image, save_image
from facegeom.landmarks import PATCH_ORDER, REGION_GROUPS, LandmarkSet, load_landmarks
from facegeom.patches import PatchGeometry, PatchSet, extract_patches

__all__ = [
    "AlignmentSpec",
    "AlignmentTransform",
    "FaceImage",
    "LandmarkSet",
    "PATCH_ORDER",
    "PatchGeometry",
    "PatchSet",
    "REGION_GROUPS",
    "align_face",
    "extract_patches",
    "load_image",
    "load_landmarks",
    "save_image",
]
