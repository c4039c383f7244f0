"""Test cases for the classification endpoint."""
import json

SMALL_BOX = {'grid': [32, 32, 32], 'box': [8, 8, 8]}


class TestClassifyEndpoints:
    """Test cases for POST /api/classify."""

    def test_subcritical_gaussian(self, client):
        """Test a Gaussian below the critical power is classified as global."""
        payload = dict(SMALL_BOX, alpha=1, b=1.0, data={'kind': 'gaussian', 'amplitude': 2.0})
        response = client.post('/api/classify', json=payload)
        assert response.status_code == 200

        report = json.loads(response.data)['report']
        assert report['verdict'] == 'GlobalMassSubcritical'
        assert report['quantities']['M'] > 0

    def test_missing_alpha(self, client):
        response = client.post('/api/classify', json={'data': {'kind': 'gaussian'}})
        assert response.status_code == 400
        assert json.loads(response.data)['code'] == 'INVALID_CONFIG'

    def test_body_must_be_json(self, client):
        response = client.post('/api/classify', data='alpha=2', content_type='text/plain')
        assert response.status_code == 400

    def test_unresolved_datum(self, client):
        """Test the resolution guard is reported with the offending field."""
        payload = dict(SMALL_BOX, alpha=1, data={'kind': 'gaussian', 'widths': 0.1})
        response = client.post('/api/classify', json=payload)
        assert response.status_code == 400

        data = json.loads(response.data)
        assert data['code'] == 'INVALID_CONFIG'
        assert data['error'].startswith('data.widths')

    def test_boundary_datum_refused(self, client):
        """Test mass at the box edge is refused with 422."""
        payload = dict(SMALL_BOX, alpha=1, data={'kind': 'gaussian', 'widths': 6.0})
        response = client.post('/api/classify', json=payload)
        assert response.status_code == 422
        assert json.loads(response.data)['code'] == 'REFUSED'
