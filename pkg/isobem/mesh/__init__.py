from .hier_mesh import (
    Element,
    MultiPatchMesh,
    PatchHierMesh,
    admissibility_violations,
    bad_neighbors,
    closure,
    dump_mesh,
    format_mesh,
    initial_mesh,
    initial_mesh_for,
    is_admissible,
    is_finer,
    neighbors,
    overlay,
    parse_mesh,
    refine,
    uniform_refine,
)
