from windcast.models.mod_turbine import BETZ_LIMIT
from windcast.validators.val_errors import NumericError


class TurbineValidator:
    @staticmethod
    def validate_height(height: float, roughness_length: float):
        """Validate that a height lies above the roughness length"""
        if height <= roughness_length:
            raise NumericError(
                f"height {height} m must exceed the roughness length {roughness_length} m",
                code="domain_error",
            )

    @staticmethod
    def validate_cp(cp: float):
        """Validate that a derived power coefficient stays under the Betz limit"""
        if not 0 < cp < BETZ_LIMIT:
            raise NumericError(
                f"derived cp={cp:.6f} is not below the Betz limit 16/27; the turbine spec is inconsistent",
                code="betz_limit",
                details={"cp": cp},
            )
