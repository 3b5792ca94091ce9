"""
Form Definitions for Collision App
Contains Django forms for:
- Scene bodies (capsules and padded polygons)
"""

from django import forms

from core.conf import get_setting
from core.constants import SHAPE_KIND_CHOICES, SHAPE_KINDS
from core.utils.validators import (
    validate_matrix,
    validate_positive,
    validate_unit_quaternion,
    validate_vector,
)
from geometry.polygons import regular_polygon
from geometry.shapes import IDENTITY_QUATERNION, Capsule, PaddedPolygon, Pose


class BodyForm(forms.Form):
    """One body of a scene file, cleaned into a Capsule or PaddedPolygon"""

    name = forms.CharField(max_length=100)
    kind = forms.ChoiceField(choices=SHAPE_KIND_CHOICES)
    r = forms.JSONField()
    q = forms.JSONField(required=False)
    R = forms.FloatField()
    L = forms.FloatField(required=False)
    C = forms.JSONField(required=False)
    d = forms.JSONField(required=False)
    regular_ngon = forms.JSONField(required=False)

    def clean_r(self):
        """Position must be a 3-vector"""
        return validate_vector(self.cleaned_data.get('r'), 3, 'r')

    def clean_q(self):
        """Quaternion must be unit within the configured tolerance"""
        q = self.cleaned_data.get('q')
        if q is None:
            return IDENTITY_QUATERNION
        return validate_unit_quaternion(
            q,
            normalize_tol=get_setting('DIFFPROX_QUATERNION_NORM_TOL', 1e-6),
            field_name='q',
        )

    def clean_R(self):
        return validate_positive(self.cleaned_data.get('R'), 'R')

    def clean_regular_ngon(self):
        ngon = self.cleaned_data.get('regular_ngon')
        if ngon is None:
            return None
        if not isinstance(ngon, dict) or set(ngon) != {'n', 'circumradius'}:
            raise forms.ValidationError('regular_ngon must be an object with keys n and circumradius')
        return regular_polygon(ngon['n'], ngon['circumradius'])

    def _clean_capsule(self, pose):
        for field in ('C', 'd', 'regular_ngon'):
            if self.cleaned_data.get(field) is not None:
                raise forms.ValidationError(f'A capsule does not take {field}')
        L = self.cleaned_data.get('L')
        if L is None:
            raise forms.ValidationError('A capsule needs a segment length L')
        return Capsule(pose, validate_positive(L, 'L'), self.cleaned_data['R'])

    def _clean_polygon(self, pose):
        if self.cleaned_data.get('L') is not None:
            raise forms.ValidationError('A padded polygon does not take L')
        C = self.cleaned_data.get('C')
        d = self.cleaned_data.get('d')
        ngon = self.cleaned_data.get('regular_ngon')

        if ngon is not None:
            if C is not None or d is not None:
                raise forms.ValidationError('Give either regular_ngon or C and d, not both')
            C, d = ngon
        elif C is None or d is None:
            raise forms.ValidationError('A padded polygon needs C and d, or regular_ngon')
        else:
            C = validate_matrix(C, (None, 2), 'C')
            d = validate_vector(d, C.shape[0], 'd')
        return PaddedPolygon(pose, C, d, self.cleaned_data['R'])

    def clean(self):
        """Build the shape once every field is valid"""
        cleaned_data = super().clean()
        if self.errors:
            return cleaned_data

        pose = Pose(cleaned_data['r'], cleaned_data['q'])
        if cleaned_data['kind'] == SHAPE_KINDS['CAPSULE']:
            cleaned_data['shape'] = self._clean_capsule(pose)
        else:
            cleaned_data['shape'] = self._clean_polygon(pose)
        return cleaned_data
