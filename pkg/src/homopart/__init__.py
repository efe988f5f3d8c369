"""homopart: homogeneous partitions and weak-regularity audits for
k-partite hypergraphs at desk scale."""

from __future__ import annotations

__version__ = "0.1.0"

from .hypercore import (
    BipartiteGraph,
    KPartiteHypergraph,
    VertexSet,
    WeightedBipartite,
    WeightedTripartite,
    density,
    link,
    neighborhood,
    partite_cover,
)
from .partitions import (
    LayeredPartition,
    PartPartition,
    RefinementReport,
    beta_refines,
    common_refinement,
    equalize,
)
from .homogenizer import (
    PipelineReport,
    SimilarityResult,
    ToleranceParams,
    TuplePartition,
    TwinReport,
    homogeneous_partition,
    similarity_block_count,
    similarity_block_size,
    similarity_input_tolerance,
    similarity_partition,
    tuple_partition,
    twin_diagnostics,
)
from .oracles import (
    ExhaustiveOracle,
    FileOracle,
    GreedyOracle,
    LinkPartitionOracle,
    PlantedOracle,
)
from .generators import FAMILIES, Instance, InstanceSpec, generate
from .gowers import (
    CascadeReport,
    CascadeWitness,
    CertificateCheck,
    ConcentrationReport,
    GowersBuild,
    GowersParams,
    IntervalLayering,
    Item2Report,
    LinkCertificate,
    OrthogonalFamily,
    QuasirandomnessReport,
    SampleResult,
    build_sequence,
    build_weighted,
    coupling_threshold,
    growth_function,
    item2_margin,
    layer_count,
    level_graph,
    link_certificate,
    orthogonal_family,
    quasirandomness_audit,
    refinement_cascade,
    sample_unweighted,
    verify_certificate,
)
from .auditor import (
    HomogeneityReport,
    RegularityWitness,
    VCResult,
    bipartite_regularity_witness,
    disagreement_pairs,
    disagreement_threshold,
    homogeneity_audit,
    slicewise_vc,
    vc_dimension,
    verify_witness,
    weak_regularity_witness,
)
from .manifest import RunManifest, file_digest
from . import io  # noqa: F401  (flat-file readers and writers)

__all__ = [
    "BipartiteGraph",
    "KPartiteHypergraph",
    "VertexSet",
    "WeightedBipartite",
    "WeightedTripartite",
    "density",
    "link",
    "neighborhood",
    "partite_cover",
    "LayeredPartition",
    "PartPartition",
    "RefinementReport",
    "beta_refines",
    "common_refinement",
    "equalize",
    "PipelineReport",
    "SimilarityResult",
    "ToleranceParams",
    "TuplePartition",
    "TwinReport",
    "homogeneous_partition",
    "similarity_block_count",
    "similarity_block_size",
    "similarity_input_tolerance",
    "similarity_partition",
    "tuple_partition",
    "twin_diagnostics",
    "ExhaustiveOracle",
    "FileOracle",
    "GreedyOracle",
    "LinkPartitionOracle",
    "PlantedOracle",
    "FAMILIES",
    "Instance",
    "InstanceSpec",
    "generate",
    "CascadeReport",
    "CascadeWitness",
    "CertificateCheck",
    "ConcentrationReport",
    "GowersBuild",
    "GowersParams",
    "IntervalLayering",
    "Item2Report",
    "LinkCertificate",
    "OrthogonalFamily",
    "QuasirandomnessReport",
    "SampleResult",
    "build_sequence",
    "build_weighted",
    "coupling_threshold",
    "growth_function",
    "item2_margin",
    "layer_count",
    "level_graph",
    "link_certificate",
    "orthogonal_family",
    "quasirandomness_audit",
    "refinement_cascade",
    "sample_unweighted",
    "verify_certificate",
    "HomogeneityReport",
    "RegularityWitness",
    "VCResult",
    "bipartite_regularity_witness",
    "disagreement_pairs",
    "disagreement_threshold",
    "homogeneity_audit",
    "slicewise_vc",
    "vc_dimension",
    "verify_witness",
    "weak_regularity_witness",
    "RunManifest",
    "file_digest",
    "io",
    "__version__",
]
